"""Image comparison metrics with optional pixel-inclusion masks."""

import numpy as np
from scipy.ndimage import uniform_filter


def rmse(a, b, include=None):
    """Root-mean-square error over the included pixels (all, if None)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"rmse: shapes {a.shape} != {b.shape}")
    d2 = (a - b) ** 2
    if include is not None:
        include = np.asarray(include).astype(bool)
        if not include.any():
            raise ValueError("rmse: inclusion mask selects no pixels")
        d2 = d2[include]
    return float(np.sqrt(d2.mean()))


def ssim(a, b, data_range, include=None, win=7, k1=0.01, k2=0.03):
    """Mean SSIM with a uniform win x win window, standard constants.

    `include` restricts the averaging of the SSIM map; the local statistics
    are still computed over full windows.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"ssim: shapes {a.shape} != {b.shape}")
    if data_range <= 0:
        raise ValueError(f"ssim: data_range must be positive, got {data_range}")
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    def f(img):
        return uniform_filter(img, size=win)

    mu_a = f(a)
    mu_b = f(b)
    var_a = f(a * a) - mu_a * mu_a
    var_b = f(b * b) - mu_b * mu_b
    cov = f(a * b) - mu_a * mu_b
    smap = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    )
    if include is not None:
        include = np.asarray(include).astype(bool)
        if not include.any():
            raise ValueError("ssim: inclusion mask selects no pixels")
        smap = smap[include]
    return float(smap.mean())
