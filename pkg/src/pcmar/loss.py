"""Inpainting loss: L = L_valid + 6 * L_hole + 0.1 * L_tv.

L_valid / L_hole are mean absolute errors over valid / hole pixels. L_tv is
the total variation of the residual (composite - target), restricted to the
hole region dilated by one pixel and normalized by that region's pixel
count. Taking TV of the residual rather than of the composite itself makes
the loss exactly zero when the prediction matches the target.
"""

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .pconv import mask_update


def composite_output(pred, data, mask):
    """Valid pixels pass through from the measurements; holes come from pred."""
    return mask * data + (1 - mask) * pred


@dataclass
class LossBreakdown:
    total: object  # scalar Node
    valid: float
    hole: float
    tv: float


def inpainting_loss(pred, target, mask, data=None,
                    hole_weight=6.0, tv_weight=0.1):
    """Build the scalar training loss node.

    pred : Node [N,1,H,W]; target, mask : arrays of the same shape.
    data : measured values used for compositing; defaults to target (in the
    training pipeline the two agree on valid pixels anyway).
    """
    target = np.asarray(target)
    mask = np.asarray(mask)
    if pred.value.shape != target.shape or mask.shape != target.shape:
        raise ValueError(
            f"inpainting_loss: shapes differ "
            f"(pred {pred.value.shape}, target {target.shape}, mask {mask.shape})"
        )
    if not np.all((mask == 0) | (mask == 1)):
        raise ValueError("inpainting_loss: mask must be binary")
    if data is None:
        data = target
    dtype = pred.value.dtype

    diff = ag.sub(pred, ag.constant(target))
    n_valid = float(mask.sum())
    n_hole = float(mask.size - n_valid)

    terms = []
    valid_val = hole_val = tv_val = 0.0
    if n_valid > 0:
        l_valid = ag.cmul(ag.sum_(ag.abs_(ag.cmul(diff, mask))), 1.0 / n_valid)
        valid_val = float(l_valid.value)
        terms.append(l_valid)
    if n_hole > 0:
        l_hole = ag.cmul(ag.sum_(ag.abs_(ag.cmul(diff, 1 - mask))), hole_weight / n_hole)
        hole_val = float(l_hole.value) / hole_weight
        terms.append(l_hole)

        # residual of the composite: (1-mask)*(pred-target) + mask*(data-target)
        resid = ag.cadd(ag.cmul(diff, 1 - mask), (mask * (data - target)).astype(dtype))
        region = _dilated_hole(mask)
        n_region = float(region.sum())
        if n_region > 0:
            pair_w = region[:, :, 1:, :] * region[:, :, :-1, :]
            pair_h = region[:, :, :, 1:] * region[:, :, :, :-1]
            tv = ag.add(
                ag.sum_(ag.abs_(ag.cmul(ag.spatial_diff(resid, 2), pair_w))),
                ag.sum_(ag.abs_(ag.cmul(ag.spatial_diff(resid, 3), pair_h))),
            )
            l_tv = ag.cmul(tv, tv_weight / n_region)
            tv_val = float(l_tv.value) / tv_weight
            terms.append(l_tv)

    total = terms[0]
    for t in terms[1:]:
        total = ag.add(total, t)
    return LossBreakdown(total=total, valid=valid_val, hole=hole_val, tv=tv_val)


def _dilated_hole(mask):
    """Hole indicator grown by one pixel (3x3 dilation), per batch item."""
    return mask_update((1 - mask).astype(mask.dtype), k=3, stride=1, pad=1)
