"""Reference inpainting methods the networks are compared against."""

import numpy as np


def hole_intervals(mask_row):
    """Maximal runs of zeros in a binary row as (start, stop) index pairs."""
    holes = np.flatnonzero(mask_row == 0)
    if holes.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(holes) > 1)
    starts = np.concatenate([[holes[0]], holes[breaks + 1]])
    stops = np.concatenate([holes[breaks], [holes[-1]]])
    return list(zip(starts.tolist(), (stops + 1).tolist()))


def linear_interp_inpaint(sino, mask):
    """Per-angle linear interpolation across the metal trace.

    Each run of hole pixels is bridged linearly between its nearest valid
    neighbors in the same detector row; runs touching the row boundary get
    the nearest valid value (constant extrapolation). Valid pixels pass
    through bit-exactly.
    """
    sino = np.asarray(sino)
    mask = np.asarray(mask)
    if sino.shape != mask.shape or sino.ndim != 2:
        raise ValueError(f"linear_interp_inpaint: shapes {sino.shape} vs {mask.shape}")
    if not np.all((mask == 0) | (mask == 1)):
        raise ValueError("linear_interp_inpaint: mask must be binary")
    out = sino.copy()
    cols = np.arange(sino.shape[1])
    for a in range(sino.shape[0]):
        m = mask[a]
        valid = np.flatnonzero(m == 1)
        if valid.size == 0:
            raise ValueError(f"linear_interp_inpaint: angle {a} has no valid detector")
        if valid.size == m.size:
            continue
        holes = cols[m == 0]
        # np.interp clamps to the edge values, which is exactly the
        # constant-extrapolation rule for boundary-touching runs
        out[a, holes] = np.interp(holes, valid, sino[a, valid].astype(np.float64)).astype(sino.dtype)
    return out
