"""Dataset samples: phantom -> (clean, corrupted, trace mask) sinograms.

A sample directory holds clean.tnsr, corrupted.tnsr, mask.tnsr,
phantom.tnsr, spec.txt and geometry.txt. The corrupted sinogram is the
forward projection of the phantom with its metal inserts; wherever the
metal-only sinogram is exactly zero, corrupted and clean agree bit-exactly
because the renders agree bit-exactly outside the metal.
"""

import os
from dataclasses import dataclass

import numpy as np

from . import phantoms
from .phantoms import PhantomConfig, PhantomSpec, random_phantom_spec, render_phantom
from .projection import Geometry, geometry_from_text, geometry_to_text, metal_trace, radon_forward
from .rng import Rng
from .tensorio import tensor_read, tensor_write


@dataclass
class SinogramSet:
    clean: np.ndarray        # [n_angles, n_detectors]
    corrupted: np.ndarray    # same; includes the metal contribution
    trace_mask: np.ndarray   # same; binary, 1 = valid (outside the metal trace)
    geometry: Geometry


@dataclass
class Sample:
    sinograms: SinogramSet
    phantom: np.ndarray      # metal-free ground-truth slice
    spec: PhantomSpec


def make_sample(rng: Rng, geo: Geometry, phantom_cfg: PhantomConfig = None) -> Sample:
    """Draw a random phantom and simulate its projections."""
    spec = random_phantom_spec(rng, phantom_cfg)
    clean_img = render_phantom(spec, geo.image_size, include_metal=False)
    metal_img = render_phantom(spec, geo.image_size, include_metal=True)
    sinos = SinogramSet(
        clean=radon_forward(clean_img, geo),
        corrupted=radon_forward(metal_img, geo),
        trace_mask=metal_trace(spec, geo),
        geometry=geo,
    )
    return Sample(sinograms=sinos, phantom=clean_img, spec=spec)


def save_sample(dirpath: str, sample: Sample):
    os.makedirs(dirpath, exist_ok=True)
    s = sample.sinograms
    tensor_write(s.clean, os.path.join(dirpath, "clean.tnsr"))
    tensor_write(s.corrupted, os.path.join(dirpath, "corrupted.tnsr"))
    tensor_write(s.trace_mask, os.path.join(dirpath, "mask.tnsr"))
    tensor_write(sample.phantom, os.path.join(dirpath, "phantom.tnsr"))
    with open(os.path.join(dirpath, "spec.txt"), "w") as fh:
        fh.write(phantoms.spec_to_text(sample.spec))
    with open(os.path.join(dirpath, "geometry.txt"), "w") as fh:
        fh.write(geometry_to_text(s.geometry))


def load_sample(dirpath: str) -> Sample:
    with open(os.path.join(dirpath, "geometry.txt")) as fh:
        geo = geometry_from_text(fh.read())
    with open(os.path.join(dirpath, "spec.txt")) as fh:
        spec = phantoms.spec_from_text(fh.read())
    sinos = SinogramSet(
        clean=tensor_read(os.path.join(dirpath, "clean.tnsr")),
        corrupted=tensor_read(os.path.join(dirpath, "corrupted.tnsr")),
        trace_mask=tensor_read(os.path.join(dirpath, "mask.tnsr")),
        geometry=geo,
    )
    phantom = tensor_read(os.path.join(dirpath, "phantom.tnsr"))
    return Sample(sinograms=sinos, phantom=phantom, spec=spec)
