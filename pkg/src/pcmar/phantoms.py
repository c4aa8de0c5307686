"""Procedural ellipse phantoms with random metal inserts.

Attenuations are additive: a pixel's value is the sum over all ellipses
whose interior contains the pixel center. Body (tissue) ellipses stay
strictly below the metal threshold, metal ellipses strictly above it, so
trace masks and metal-exclusion masks are unambiguous. All ellipses must
fit inside the unit disk; the detector row then always covers the object.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import Rng

METAL_THRESHOLD = 5.0


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a: float       # semi-axis along the rotated x direction
    b: float
    theta: float   # rotation, radians
    value: float   # additive attenuation


@dataclass
class PhantomSpec:
    body: list
    metal: list

    def __post_init__(self):
        for e in self.body:
            _check_inside(e)
            if not e.value < METAL_THRESHOLD:
                raise ValueError(f"body ellipse attenuation {e.value} not below {METAL_THRESHOLD}")
        for e in self.metal:
            _check_inside(e)
            if not e.value > METAL_THRESHOLD:
                raise ValueError(f"metal ellipse attenuation {e.value} not above {METAL_THRESHOLD}")

    def metal_only(self):
        return PhantomSpec(body=[], metal=list(self.metal))


def _check_inside(e: Ellipse):
    if e.a <= 0 or e.b <= 0:
        raise ValueError(f"ellipse semi-axes must be positive, got a={e.a} b={e.b}")
    reach = math.hypot(e.cx, e.cy) + max(e.a, e.b)
    if reach > 1.0 + 1e-12:
        raise ValueError(f"ellipse leaves the unit disk (|center| + max axis = {reach:.4f})")


def render_phantom(spec: PhantomSpec, size: int, include_metal: bool) -> np.ndarray:
    """Rasterize at pixel centers on [-1,1]^2; float32 [size, size].

    Accumulates in float64 so that adding metal never perturbs tissue-only
    pixels: with-metal and metal-free renders agree bit-exactly outside the
    metal, which downstream sinogram identities rely on.
    """
    delta = 2.0 / size
    xs = (np.arange(size) + 0.5) * delta - 1.0
    ys = 1.0 - (np.arange(size) + 0.5) * delta
    x, y = np.meshgrid(xs, ys)  # row = y, col = x; y axis points up
    img = np.zeros((size, size), dtype=np.float64)
    ellipses = list(spec.body) + (list(spec.metal) if include_metal else [])
    for e in ellipses:
        dx = x - e.cx
        dy = y - e.cy
        c, s = math.cos(e.theta), math.sin(e.theta)
        u = (dx * c + dy * s) / e.a
        v = (-dx * s + dy * c) / e.b
        img += np.where(u * u + v * v <= 1.0, e.value, 0.0)
    return img.astype(np.float32)


def render_metal_only(spec: PhantomSpec, size: int) -> np.ndarray:
    """Just the metal inserts; > 0 exactly on metal pixels."""
    return render_phantom(spec.metal_only(), size, include_metal=True)


# ---------------------------------------------------------------------------
# random phantoms
# ---------------------------------------------------------------------------

@dataclass
class PhantomConfig:
    """Sampling ranges for random phantoms. Values are attenuation units
    with tissue ~<= 1 and metal well above METAL_THRESHOLD."""
    torso_axis_range: tuple = (0.55, 0.80)
    torso_center_radius: float = 0.12
    torso_value_range: tuple = (0.3, 0.6)
    body_count_range: tuple = (2, 6)
    body_axis_range: tuple = (0.05, 0.28)
    body_center_radius: float = 0.45
    body_value_range: tuple = (0.1, 0.5)
    metal_count_range: tuple = (1, 3)
    metal_axis_range: tuple = (0.04, 0.10)
    metal_center_radius: float = 0.55
    metal_value_range: tuple = (8.0, 15.0)
    max_retries: int = 100


def _rand_center(rng: Rng, radius: float):
    # polar draw: uniform over the disk, fixed two-call budget
    r = radius * math.sqrt(rng.uniform())
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return r * math.cos(phi), r * math.sin(phi)


def _rand_ellipse(rng: Rng, center_radius, axis_range, value_range):
    cx, cy = _rand_center(rng, center_radius)
    a = rng.uniform(*axis_range)
    b = rng.uniform(*axis_range)
    theta = rng.uniform(0.0, math.pi)
    value = rng.uniform(*value_range)
    return Ellipse(cx, cy, a, b, theta, value)


def random_phantom_spec(rng: Rng, cfg: PhantomConfig = None) -> PhantomSpec:
    """Draw a torso plus inner tissue ellipses plus 1..n metal inserts.

    Resamples any ellipse that escapes the unit disk, up to cfg.max_retries
    per ellipse; the default ranges cannot escape, but custom ones might.
    """
    cfg = cfg or PhantomConfig()

    def draw(center_radius, axis_range, value_range):
        for _ in range(cfg.max_retries):
            e = _rand_ellipse(rng, center_radius, axis_range, value_range)
            if math.hypot(e.cx, e.cy) + max(e.a, e.b) <= 1.0:
                return e
        raise RuntimeError(f"random_phantom_spec: no valid ellipse after {cfg.max_retries} tries")

    body = [draw(cfg.torso_center_radius, cfg.torso_axis_range, cfg.torso_value_range)]
    lo, hi = cfg.body_count_range
    for _ in range(lo + rng.randint(hi - lo + 1)):
        body.append(draw(cfg.body_center_radius, cfg.body_axis_range, cfg.body_value_range))
    metal = []
    lo, hi = cfg.metal_count_range
    for _ in range(lo + rng.randint(hi - lo + 1)):
        metal.append(draw(cfg.metal_center_radius, cfg.metal_axis_range, cfg.metal_value_range))
    return PhantomSpec(body=body, metal=metal)


def shepp_logan_spec() -> PhantomSpec:
    """The classic ten-ellipse head phantom (additive gray-level deltas)."""
    rows = [
        # value   a       b       cx     cy      angle_deg
        (2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
        (-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
        (-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
        (-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
        (0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
        (0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
        (0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
        (0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
        (0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
        (0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
    ]
    body = [
        Ellipse(cx, cy, a, b, math.radians(deg), v)
        for v, a, b, cx, cy, deg in rows
    ]
    return PhantomSpec(body=body, metal=[])


# ---------------------------------------------------------------------------
# plain-text serialization (spec.txt)
# ---------------------------------------------------------------------------

def spec_to_text(spec: PhantomSpec) -> str:
    lines = []
    for kind, ellipses in (("body", spec.body), ("metal", spec.metal)):
        for e in ellipses:
            lines.append(
                f"{kind} {e.cx!r} {e.cy!r} {e.a!r} {e.b!r} {e.theta!r} {e.value!r}"
            )
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> PhantomSpec:
    body, metal = [], []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        kind, *vals = line.split()
        if len(vals) != 6:
            raise ValueError(f"bad phantom spec line: {line!r}")
        e = Ellipse(*(float(v) for v in vals))
        if kind == "body":
            body.append(e)
        elif kind == "metal":
            metal.append(e)
        else:
            raise ValueError(f"bad phantom spec kind: {kind!r}")
    return PhantomSpec(body=body, metal=metal)
