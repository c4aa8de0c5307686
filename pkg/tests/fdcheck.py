"""Finite-difference gradient oracle, independent of the autograd engine.

Everything runs in float64: central differences with a relative step of
1e-4, compared against analytic gradients via a max-abs error normalized by
the numeric gradient's scale.
"""

import numpy as np

from pcmar import autograd as ag


def numeric_grad(f, x, h_rel=1e-4):
    """Central-difference gradient of scalar f() w.r.t. array x (in place)."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = x[idx]
        h = h_rel * max(1.0, abs(orig))
        x[idx] = orig + h
        fp = f()
        x[idx] = orig - h
        fm = f()
        x[idx] = orig
        g[idx] = (fp - fm) / (2.0 * h)
    return g


def rel_error(analytic, numeric):
    denom = max(float(np.abs(numeric).max()), 1.0)
    return float(np.abs(analytic - numeric).max()) / denom


def check_op(build, leaves, rng, tol=1e-5, h_rel=1e-4):
    """Gradient-check `build(leaf_nodes) -> output node` against differences.

    leaves: list of float64 arrays (mutated during differencing). The output
    is projected onto a fixed random vector so every output element gets a
    say in the scalar loss. Returns the worst relative error over leaves.
    """
    nodes = [ag.Parameter(x, f"leaf{i}") for i, x in enumerate(leaves)]
    out = build(nodes)
    proj = np.array(rng.normals(out.value.size), dtype=np.float64).reshape(out.value.shape)

    def scalar():
        for n, x in zip(nodes, leaves):
            n.value = x
        return float(ag.sum_(ag.cmul(build(nodes), proj)).value)

    loss = ag.sum_(ag.cmul(out, proj))
    ag.backward(loss)
    worst = 0.0
    for n, x in zip(nodes, leaves):
        num = numeric_grad(scalar, x, h_rel)
        worst = max(worst, rel_error(n.grad, num))
    return worst
