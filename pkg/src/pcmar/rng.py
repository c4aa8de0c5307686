"""Deterministic random numbers: xoshiro256** seeded via splitmix64.

Every stochastic choice in this package flows through this generator, so a
64-bit seed pins the whole pipeline bit-for-bit across runs and platforms.
The algorithm is fixed; do not swap it out, or archived seeds stop meaning
anything.
"""

import math

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15


def _mix64(z):
    """splitmix64 output function; decorrelates nearby integers."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(seed, index):
    """Per-sample seed: splitmix64 finalizer of (seed XOR finalizer(index + 1)).

    Plain seed XOR index would make adjacent streams start too close; the
    finalizer scrambles the index first.
    """
    return _mix64((seed ^ _mix64(index + 1)) & _MASK)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


class Rng:
    """xoshiro256** stream. Same seed, same sequence, everywhere."""

    def __init__(self, seed):
        # splitmix64 expansion of the seed into the 256-bit state
        s = seed & _MASK
        state = []
        for _ in range(4):
            s = (s + _GOLDEN) & _MASK
            state.append(_mix64(s))
        self._s = state

    def next_u64(self):
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self, lo=0.0, hi=1.0):
        """Uniform float in [lo, hi); 53-bit mantissa resolution."""
        u = (self.next_u64() >> 11) * 2.0**-53
        return lo + (hi - lo) * u

    def randint(self, n):
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError(f"randint: n must be positive, got {n}")
        return min(int(self.uniform() * n), n - 1)

    def normal(self, mu=0.0, sigma=1.0):
        """One standard normal draw (Box-Muller; consumes two uniforms)."""
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53  # in (0, 1], log-safe
        u2 = (self.next_u64() >> 11) * 2.0**-53
        return mu + sigma * math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n):
        """n standard normals, interleaving both Box-Muller outputs per pair."""
        out = []
        pairs = (n + 1) // 2
        for _ in range(pairs):
            u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53
            u2 = (self.next_u64() >> 11) * 2.0**-53
            r = math.sqrt(-2.0 * math.log(u1))
            a = 2.0 * math.pi * u2
            out.append(r * math.cos(a))
            out.append(r * math.sin(a))
        return out[:n]

    def permutation(self, n):
        """Fisher-Yates shuffle of range(n)."""
        perm = list(range(n))
        for i in range(n - 1, 0, -1):
            j = self.randint(i + 1)
            perm[i], perm[j] = perm[j], perm[i]
        return perm
