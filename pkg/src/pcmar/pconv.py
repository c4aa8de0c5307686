"""Partial convolution: convolve only where the mask says the data is real.

Per output pixel, with window mask M and window coverage 1 (the all-ones
tensor pushed through the same zero padding as M):

    x' = W^T (X . M) * sum(1) / sum(M) + b   if sum(M) > 0
    x' = 0                                   otherwise
    m' = 1 iff sum(M) > 0

The single-channel mask is logically replicated across input channels, so
the channel count cancels out of the ratio. Because sum(1) counts only
in-image window slots, an all-valid mask gives scale == 1.0 exactly and the
layer degenerates bitwise to a plain convolution, padding included.
"""

from dataclasses import dataclass, field

import numpy as np

from .autograd import (
    Node,
    conv_backward_w,
    conv_backward_x,
    conv_forward_raw,
)


def _require_binary(mask, who):
    if not np.all((mask == 0) | (mask == 1)):
        raise ValueError(f"{who}: mask must be strictly binary")


def _coverage(h, w, k, stride, pad, dtype):
    """Count of in-image slots per output window; [Ho, Wo]."""

    def cov1d(n):
        n_out = (n + 2 * pad - k) // stride + 1
        start = np.arange(n_out) * stride - pad
        lo = np.maximum(start, 0)
        hi = np.minimum(start + k - 1, n - 1)
        return np.maximum(hi - lo + 1, 0).astype(dtype)

    return np.outer(cov1d(h), cov1d(w))


def _window_sums(mask, k, stride, pad):
    """sum(M) per window via convolution with an all-ones kernel."""
    ones_k = np.ones((1, 1, k, k), dtype=mask.dtype)
    s, _ = conv_forward_raw(mask, ones_k, stride, pad)
    return s


def mask_update(mask, k, stride, pad=None):
    """Eq.-style mask growth: output 1 wherever any window input was valid.

    Equals morphological dilation by the k x k structuring element,
    stride-subsampled. Zero padding, so an all-hole mask stays all holes.
    """
    mask = np.asarray(mask)
    _require_binary(mask, "mask_update")
    if pad is None:
        pad = (k - 1) // 2
    squeeze = mask.ndim == 2
    m4 = mask.reshape((1, 1) + mask.shape) if squeeze else mask
    s = _window_sums(m4, k, stride, pad)
    out = (s > 0).astype(mask.dtype)
    return out[0, 0] if squeeze else out


@dataclass
class MaskedImage:
    """Data plus a same-spatial-shape binary validity mask (1 = valid).

    Hole pixels may hold arbitrary finite values; every partial-conv output
    is independent of them by construction.
    """

    data: np.ndarray   # [N, C, H, W]
    mask: np.ndarray   # [N, 1, H, W]

    def __post_init__(self):
        self.data = np.asarray(self.data)
        self.mask = np.asarray(self.mask)
        if self.data.ndim != 4 or self.mask.ndim != 4:
            raise ValueError(
                f"MaskedImage: need [N,C,H,W] arrays, got {self.data.shape} / {self.mask.shape}"
            )
        if self.mask.shape[1] != 1 or self.mask.shape[2:] != self.data.shape[2:] \
                or self.mask.shape[0] != self.data.shape[0]:
            raise ValueError(
                f"MaskedImage: mask shape {self.mask.shape} does not match data {self.data.shape}"
            )
        _require_binary(self.mask, "MaskedImage")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("MaskedImage: data must be finite everywhere")


@dataclass
class PartialConvLayer:
    """Weights plus the mask-update rule (all-ones kernel, same k and stride)."""

    w: np.ndarray      # [F, C, k, k]
    b: np.ndarray      # [F]
    stride: int = 1
    pad: int = field(default=-1)  # -1 means same-padding (k-1)//2

    def __post_init__(self):
        self.w = np.asarray(self.w)
        self.b = np.asarray(self.b)
        if self.pad < 0:
            self.pad = (self.w.shape[2] - 1) // 2

    @property
    def k(self):
        return self.w.shape[2]


def pconv_forward_raw(x, mask, w, b, stride, pad):
    """Shared kernel for the pure and autodiff paths.

    Returns (y, mask_out, cache); cache carries what backward needs.
    """
    _require_binary(mask, "partial_conv")
    if mask.shape[1] != 1 or mask.shape[2:] != x.shape[2:] or mask.shape[0] != x.shape[0]:
        raise ValueError(f"partial_conv: mask shape {mask.shape} does not match input {x.shape}")
    if x.shape[1] != w.shape[1]:
        raise ValueError(f"partial_conv: input has {x.shape[1]} channels, weights expect {w.shape[1]}")
    k = w.shape[2]
    xm = x * mask
    raw, cols = conv_forward_raw(xm, w, stride, pad)
    s = _window_sums(mask, k, stride, pad)
    cov = _coverage(x.shape[2], x.shape[3], k, stride, pad, x.dtype)
    valid = s > 0
    scale = np.where(valid, cov / np.maximum(s, 1), np.asarray(0, dtype=x.dtype))
    y = raw * scale + b[None, :, None, None] * valid
    mask_out = valid.astype(mask.dtype)
    cache = (cols, scale, valid, xm.shape)
    return y, mask_out, cache


def partial_conv_forward(x: MaskedImage, layer: PartialConvLayer) -> MaskedImage:
    """Apply one partial-conv layer to a masked image (no graph, no grads)."""
    y, mask_out, _ = pconv_forward_raw(
        x.data, x.mask, layer.w, layer.b, layer.stride, layer.pad
    )
    return MaskedImage(y, mask_out)


def pconv2d(x: Node, mask: np.ndarray, w: Node, b: Node, stride=1, pad=0):
    """Autodiff partial convolution. Returns (output node, updated mask array).

    The mask and the renormalization it induces are constants of the graph;
    gradients flow through data, weights, and bias only.
    """
    y, mask_out, cache = pconv_forward_raw(x.value, mask, w.value, b.value, stride, pad)
    cols, scale, valid, xm_shape = cache
    w_val, w_shape = w.value, w.value.shape
    mask_c = mask

    def bwd(g):
        graw = g * scale
        if x.needs_grad:
            dx = conv_backward_x(graw, w_val, xm_shape, stride, pad) * mask_c
        else:
            dx = None
        dw = conv_backward_w(cols, graw).reshape(w_shape) if w.needs_grad else None
        db = (g * valid).sum(axis=(0, 2, 3))
        return dx, dw, db

    return Node(y, (x, w, b), bwd), mask_out
