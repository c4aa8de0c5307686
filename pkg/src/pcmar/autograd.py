"""Reverse-mode autodiff over the fixed operator set the U-Nets need.

Define-by-run graph of numpy-valued nodes. The primitive set is closed:
conv2d, activations, nearest-neighbor upsampling, channel concat,
elementwise add/sub/mul/abs, sum, and forward differences (for the TV loss
term). Partial convolution lives in pcmar.pconv and reuses the conv kernels
here. Everything is deterministic: fixed loop orders, no atomics, dtype
follows the inputs (float32 in production, float64 for gradient checks).
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Node:
    """One value in the computation graph.

    `grad` accumulates across backward() calls; running backward twice on
    the same graph doubles every gradient exactly.
    """

    __slots__ = ("value", "grad", "parents", "needs_grad", "_backward")

    def __init__(self, value, parents=(), backward=None, needs_grad=None):
        self.value = np.asarray(value)
        self.grad = None
        self.parents = tuple(parents)
        self._backward = backward
        if needs_grad is None:
            needs_grad = any(p.needs_grad for p in self.parents)
        self.needs_grad = needs_grad

    @property
    def shape(self):
        return self.value.shape

    def accumulate(self, g):
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += g

    def zero_grad(self):
        if self.grad is not None:
            self.grad[...] = 0


class Parameter(Node):
    """Trainable leaf with a unique name (the checkpoint key)."""

    __slots__ = ("name",)

    def __init__(self, value, name):
        super().__init__(np.asarray(value), needs_grad=True)
        self.name = name


def constant(value):
    """Leaf that never receives a gradient."""
    return Node(np.asarray(value), needs_grad=False)


def _topo_order(root):
    """Iterative post-order DFS; deterministic in graph construction order."""
    order = []
    visited = set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for p in reversed(node.parents):
            if id(p) not in visited:
                stack.append((p, False))
    return order


def backward(loss):
    """Accumulate d(loss)/d(node) into .grad for every node reachable from loss.

    `loss` must be a scalar node. Each call computes an independent adjoint
    pass and adds it on top of whatever is already in .grad.
    """
    if loss.value.size != 1:
        raise ValueError(f"backward: loss must be scalar, got shape {loss.value.shape}")
    order = _topo_order(loss)
    adj = {id(loss): np.ones_like(loss.value)}
    for node in reversed(order):
        g = adj.pop(id(node), None)
        if g is None:
            continue
        node.accumulate(g)
        if node._backward is None:
            continue
        contribs = node._backward(g)
        for p, c in zip(node.parents, contribs):
            if c is None or not p.needs_grad:
                continue
            if c is g:
                c = c.copy()  # aliases the popped adjoint; later += must not corrupt it
            key = id(p)
            if key in adj:
                adj[key] += c
            else:
                adj[key] = c


# ---------------------------------------------------------------------------
# convolution kernels (shared with pcmar.pconv)
# ---------------------------------------------------------------------------

def _im2col(x, k, stride, pad):
    """Unfold [N,C,H,W] into [N, C*k*k, Ho*Wo] patch columns."""
    n, c, h, w = x.shape
    if pad > 0:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    win = sliding_window_view(x, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    ho, wo = win.shape[2], win.shape[3]
    cols = np.ascontiguousarray(win.transpose(0, 1, 4, 5, 2, 3))
    return cols.reshape(n, c * k * k, ho * wo), ho, wo


def conv_forward_raw(x, w, stride, pad, cols=None):
    """Cross-correlation without bias. Returns (y, cols) so backward can reuse cols."""
    f, c, k, _ = w.shape
    if cols is None:
        cols, ho, wo = _im2col(x, k, stride, pad)
    else:
        ho = (x.shape[2] + 2 * pad - k) // stride + 1
        wo = (x.shape[3] + 2 * pad - k) // stride + 1
    y = np.matmul(w.reshape(f, c * k * k), cols)
    return y.reshape(x.shape[0], f, ho, wo), cols


def conv_backward_w(cols, dy):
    """d(conv)/dw from cached columns: [F, C*k*k] reshaped by the caller."""
    n, f = dy.shape[0], dy.shape[1]
    dyr = dy.reshape(n, f, -1)
    return np.matmul(dyr, cols.transpose(0, 2, 1)).sum(axis=0)


def conv_backward_x(dy, w, x_shape, stride, pad):
    """d(conv)/dx as a stride-1 correlation with the flipped, transposed kernel."""
    n, c, h, wd = x_shape
    f, _, k, _ = w.shape
    ho, wo = dy.shape[2], dy.shape[3]
    if stride > 1:
        dyd = np.zeros((n, f, (ho - 1) * stride + 1, (wo - 1) * stride + 1), dtype=dy.dtype)
        dyd[:, :, ::stride, ::stride] = dy
    else:
        dyd = dy
    rh = (h + 2 * pad - k) % stride
    rw = (wd + 2 * pad - k) % stride
    pb = k - 1 - pad
    dyp = np.pad(dyd, ((0, 0), (0, 0), (pb, pb + rh), (pb, pb + rw)))
    w_flip = np.ascontiguousarray(w[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    dx, _ = conv_forward_raw(dyp, w_flip, 1, 0)
    return dx


def _check_conv_shapes(x, w, b, stride, pad):
    if x.ndim != 4:
        raise ValueError(f"conv2d: input must be [N,C,H,W], got {x.shape}")
    f, c, k, k2 = w.shape
    if k != k2:
        raise ValueError(f"conv2d: kernel must be square, got {k}x{k2}")
    if k % 2 != 1:
        raise ValueError(f"conv2d: kernel size must be odd, got {k}")
    if x.shape[1] != c:
        raise ValueError(f"conv2d: input has {x.shape[1]} channels, weights expect {c}")
    if b is not None and b.shape != (f,):
        raise ValueError(f"conv2d: bias shape {b.shape} != ({f},)")
    ho = (x.shape[2] + 2 * pad - k) // stride + 1
    wo = (x.shape[3] + 2 * pad - k) // stride + 1
    if ho < 1 or wo < 1:
        raise ValueError(f"conv2d: output would be {ho}x{wo} for input {x.shape[2]}x{x.shape[3]}")


def conv2d(x, w, b=None, stride=1, pad=0):
    """Standard convolution (cross-correlation) with per-filter bias."""
    _check_conv_shapes(x.value, w.value, None if b is None else b.value, stride, pad)
    y, cols = conv_forward_raw(x.value, w.value, stride, pad)
    if b is not None:
        y = y + b.value[None, :, None, None]
    x_shape, w_shape = x.value.shape, w.value.shape
    w_val = w.value

    def bwd(g):
        dx = conv_backward_x(g, w_val, x_shape, stride, pad) if x.needs_grad else None
        dw = conv_backward_w(cols, g).reshape(w_shape) if w.needs_grad else None
        if b is None:
            return dx, dw
        return dx, dw, g.sum(axis=(0, 2, 3))

    parents = (x, w) if b is None else (x, w, b)
    return Node(y, parents, bwd)


# ---------------------------------------------------------------------------
# pointwise and structural ops
# ---------------------------------------------------------------------------

def relu(x):
    mask = x.value > 0
    return Node(np.where(mask, x.value, 0), (x,), lambda g: (g * mask,))


def leaky_relu(x, slope=0.2):
    mask = x.value > 0
    factor = np.where(mask, np.asarray(1, dtype=x.value.dtype), np.asarray(slope, dtype=x.value.dtype))
    return Node(x.value * factor, (x,), lambda g: (g * factor,))


def upsample_nearest2x(x):
    """Replicate each pixel into a 2x2 block; backward sums the block."""
    v = x.value
    n, c, h, w = v.shape
    y = np.repeat(np.repeat(v, 2, axis=2), 2, axis=3)

    def bwd(g):
        return (g.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5)),)

    return Node(y, (x,), bwd)


def concat_channels(a, b):
    va, vb = a.value, b.value
    if va.shape[0] != vb.shape[0] or va.shape[2:] != vb.shape[2:]:
        raise ValueError(f"concat_channels: shapes {va.shape} and {vb.shape} differ outside channels")
    c1 = va.shape[1]
    y = np.concatenate([va, vb], axis=1)
    return Node(y, (a, b), lambda g: (g[:, :c1], g[:, c1:]))


def add(a, b):
    if a.value.shape != b.value.shape:
        raise ValueError(f"add: shapes {a.value.shape} != {b.value.shape}")
    return Node(a.value + b.value, (a, b), lambda g: (g, g))


def sub(a, b):
    if a.value.shape != b.value.shape:
        raise ValueError(f"sub: shapes {a.value.shape} != {b.value.shape}")
    return Node(a.value - b.value, (a, b), lambda g: (g, -g))


def mul(a, b):
    if a.value.shape != b.value.shape:
        raise ValueError(f"mul: shapes {a.value.shape} != {b.value.shape}")
    va, vb = a.value, b.value
    return Node(va * vb, (a, b), lambda g: (g * vb, g * va))


def cmul(x, c):
    """Multiply by a constant array or scalar (broadcastable onto x)."""
    c = np.asarray(c, dtype=x.value.dtype)
    y = x.value * c
    if y.shape != x.value.shape:
        raise ValueError("cmul: constant must not broadcast x to a larger shape")
    return Node(y, (x,), lambda g: (g * c,))


def cadd(x, c):
    """Add a constant array or scalar of the same shape."""
    c = np.asarray(c, dtype=x.value.dtype)
    y = x.value + c
    if y.shape != x.value.shape:
        raise ValueError("cadd: constant must not broadcast x to a larger shape")
    return Node(y, (x,), lambda g: (g,))


def abs_(x):
    sign = np.sign(x.value)  # subgradient 0 at exactly 0
    return Node(np.abs(x.value), (x,), lambda g: (g * sign,))


def sum_(x):
    """Sum all elements into a scalar node."""
    shape = x.value.shape
    dtype = x.value.dtype

    def bwd(g):
        return (np.full(shape, g, dtype=dtype),)

    return Node(np.asarray(x.value.sum(), dtype=dtype), (x,), bwd)


def spatial_diff(x, axis):
    """Forward differences along H (axis=2) or W (axis=3); output one shorter."""
    if axis not in (2, 3):
        raise ValueError(f"spatial_diff: axis must be 2 or 3, got {axis}")
    y = np.diff(x.value, axis=axis)

    def bwd(g):
        gx = np.zeros_like(x.value)
        if axis == 2:
            gx[:, :, 1:, :] += g
            gx[:, :, :-1, :] -= g
        else:
            gx[:, :, :, 1:] += g
            gx[:, :, :, :-1] -= g
        return (gx,)

    return Node(y, (x,), bwd)
