"""2D parallel-beam forward projection and filtered backprojection.

Conventions, shared by every function here:
  * image support is [-1,1]^2, pixel (r, c) centered at
    x = (c+0.5)*dx - 1,  y = 1 - (r+0.5)*dx,  dx = 2/size  (y up);
  * angles theta_i = i * pi / n_angles over [0, pi);
  * detector axis n = (cos t, sin t), ray direction d = (-sin t, cos t);
  * detector offsets s_j = (j - (n_det-1)/2) * spacing.

The forward projector is ray-driven (bilinear samples every half pixel
along the ray); the backprojector is pixel-driven with linear detector
interpolation; the ramp filter is the discrete spatial-domain Ram-Lak
kernel. All three are linear operators and bit-reproducible: fixed loop
order over angles, no FFTs.
"""

import math
from dataclasses import dataclass

import numpy as np

from .phantoms import PhantomSpec, render_metal_only

TRACE_EPS = 1e-6


@dataclass(frozen=True)
class Geometry:
    n_angles: int
    n_detectors: int
    spacing: float    # detector pitch in image units (image spans [-1,1])
    image_size: int

    def __post_init__(self):
        if self.n_angles < 1 or self.n_detectors < 2 or self.image_size < 2:
            raise ValueError(f"degenerate geometry: {self}")
        extent = self.n_detectors * self.spacing
        if extent < 2.0 * math.sqrt(2.0) - 1e-9:
            raise ValueError(
                f"detector row ({extent:.3f} image units) does not cover the "
                f"field of view diagonal ({2 * math.sqrt(2):.3f}); increase "
                f"n_detectors or spacing"
            )

    @property
    def angles(self):
        return np.arange(self.n_angles) * (math.pi / self.n_angles)

    @property
    def offsets(self):
        return (np.arange(self.n_detectors) - (self.n_detectors - 1) / 2.0) * self.spacing


def geometry_to_text(geo: Geometry) -> str:
    return (
        f"n_angles={geo.n_angles}\n"
        f"n_detectors={geo.n_detectors}\n"
        f"spacing={geo.spacing!r}\n"
        f"image_size={geo.image_size}\n"
    )


def geometry_from_text(text: str) -> Geometry:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()
    return Geometry(
        n_angles=int(kv["n_angles"]),
        n_detectors=int(kv["n_detectors"]),
        spacing=float(kv["spacing"]),
        image_size=int(kv["image_size"]),
    )


def _bilinear(img, x, y):
    """Sample img at continuous image coordinates; zero outside."""
    size = img.shape[0]
    dx = 2.0 / size
    col = (x + 1.0) / dx - 0.5
    row = (1.0 - y) / dx - 0.5
    c0 = np.floor(col).astype(np.int64)
    r0 = np.floor(row).astype(np.int64)
    fc = (col - c0).astype(img.dtype)
    fr = (row - r0).astype(img.dtype)

    def fetch(r, c):
        ok = (r >= 0) & (r < size) & (c >= 0) & (c < size)
        v = img[np.clip(r, 0, size - 1), np.clip(c, 0, size - 1)]
        return np.where(ok, v, 0).astype(img.dtype)

    return ((1 - fr) * (1 - fc) * fetch(r0, c0)
            + (1 - fr) * fc * fetch(r0, c0 + 1)
            + fr * (1 - fc) * fetch(r0 + 1, c0)
            + fr * fc * fetch(r0 + 1, c0 + 1))


def radon_forward(img, geo: Geometry) -> np.ndarray:
    """Line integrals; [n_angles, n_detectors], attenuation x image units."""
    img = np.asarray(img, dtype=np.float32)
    if img.shape != (geo.image_size, geo.image_size):
        raise ValueError(f"radon_forward: image {img.shape} != geometry size {geo.image_size}")
    step = 1.0 / geo.image_size        # half a pixel
    half_diag = math.sqrt(2.0)
    n_steps = int(2 * half_diag / step) + 1
    t = (-half_diag + np.arange(n_steps) * step).astype(np.float32)
    s = geo.offsets.astype(np.float32)
    sino = np.empty((geo.n_angles, geo.n_detectors), dtype=np.float32)
    for i, theta in enumerate(geo.angles):
        ct, st = math.cos(theta), math.sin(theta)
        x = s[:, None] * ct - t[None, :] * st   # [n_det, n_steps]
        y = s[:, None] * st + t[None, :] * ct
        sino[i] = _bilinear(img, x, y).sum(axis=1) * step
    return sino


def metal_trace(spec: PhantomSpec, geo: Geometry) -> np.ndarray:
    """Binary validity mask: 1 away from metal, 0 where metal projects.

    Thresholds the metal-only sinogram at TRACE_EPS; a metal-free spec
    yields an all-ones mask.
    """
    if not spec.metal:
        return np.ones((geo.n_angles, geo.n_detectors), dtype=np.float32)
    metal_img = render_metal_only(spec, geo.image_size)
    metal_sino = radon_forward(metal_img, geo)
    return (metal_sino <= TRACE_EPS).astype(np.float32)


def ram_lak_kernel(n_detectors: int, spacing: float) -> np.ndarray:
    """Discrete spatial-domain ramp kernel h[-(D-1)] .. h[D-1]."""
    n = np.arange(-(n_detectors - 1), n_detectors)
    h = np.zeros(n.shape, dtype=np.float64)
    h[n == 0] = 1.0 / (4.0 * spacing * spacing)
    odd = (n % 2) != 0
    h[odd] = -1.0 / (n[odd] * math.pi * spacing) ** 2
    return h.astype(np.float32)


def filter_sinogram(sino, geo: Geometry) -> np.ndarray:
    """Row-wise ramp filtering; discrete convolution scaled by the pitch."""
    d = geo.n_detectors
    h = ram_lak_kernel(d, geo.spacing)
    # Toeplitz application: filtered[i] = spacing * sum_j sino[j] * h[i-j]
    idx = np.arange(d)
    toe = h[idx[None, :] - idx[:, None] + d - 1]   # [j, i]
    return (np.asarray(sino, dtype=np.float32) @ toe) * np.float32(geo.spacing)


def fbp_reconstruct(sino, geo: Geometry) -> np.ndarray:
    """Ramp-filter then backproject; [image_size, image_size]."""
    sino = np.asarray(sino, dtype=np.float32)
    if sino.shape != (geo.n_angles, geo.n_detectors):
        raise ValueError(
            f"fbp_reconstruct: sinogram {sino.shape} != geometry "
            f"({geo.n_angles}, {geo.n_detectors})"
        )
    filt = filter_sinogram(sino, geo)
    size = geo.image_size
    dx = 2.0 / size
    xs = ((np.arange(size) + 0.5) * dx - 1.0).astype(np.float32)
    ys = (1.0 - (np.arange(size) + 0.5) * dx).astype(np.float32)
    x, y = np.meshgrid(xs, ys)
    d = geo.n_detectors
    center = (d - 1) / 2.0
    img = np.zeros((size, size), dtype=np.float32)
    for i, theta in enumerate(geo.angles):
        u = (x * math.cos(theta) + y * math.sin(theta)) / geo.spacing + center
        i0 = np.floor(u).astype(np.int64)
        frac = (u - i0).astype(np.float32)
        ok0 = (i0 >= 0) & (i0 < d)
        ok1 = (i0 + 1 >= 0) & (i0 + 1 < d)
        row = filt[i]
        v0 = np.where(ok0, row[np.clip(i0, 0, d - 1)], 0)
        v1 = np.where(ok1, row[np.clip(i0 + 1, 0, d - 1)], 0)
        img += (1 - frac) * v0 + frac * v1
    img *= np.float32(math.pi / geo.n_angles)
    return img
