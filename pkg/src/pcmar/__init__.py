"""Sinogram inpainting with partial convolutions for metal artifact reduction.

Library layout:
    tensorio    TNSR binary tensor format, PGM export
    rng         seeded xoshiro256** stream (all randomness flows through it)
    autograd    reverse-mode autodiff over the fixed operator set
    optim       Adam, parameter checkpoints
    pconv       partial convolution + mask update
    unet        partial / conventional encoder-decoder networks
    loss        composite output and the valid/hole/TV inpainting loss
    phantoms    procedural ellipse phantoms with metal inserts
    projection  parallel-beam Radon transform, metal traces, Ram-Lak FBP
    samples     dataset sample simulation and on-disk layout
    baselines   linear-interpolation inpainting
    metrics     RMSE / SSIM with pixel-inclusion masks
    pipeline    generate -> train -> inpaint -> reconstruct -> evaluate
    cli         `pcmar` command-line entry point
"""

from .pconv import MaskedImage, PartialConvLayer, mask_update, partial_conv_forward
from .phantoms import Ellipse, PhantomConfig, PhantomSpec, render_phantom, shepp_logan_spec
from .projection import Geometry, fbp_reconstruct, metal_trace, radon_forward
from .rng import Rng, derive_seed
from .samples import Sample, SinogramSet, make_sample
from .tensorio import pgm_export, tensor_read, tensor_write
from .unet import UNet, UNetSpec

__version__ = "0.1.0"

__all__ = [
    "Ellipse",
    "Geometry",
    "MaskedImage",
    "PartialConvLayer",
    "PhantomConfig",
    "PhantomSpec",
    "Rng",
    "Sample",
    "SinogramSet",
    "UNet",
    "UNetSpec",
    "derive_seed",
    "fbp_reconstruct",
    "make_sample",
    "mask_update",
    "metal_trace",
    "partial_conv_forward",
    "pgm_export",
    "radon_forward",
    "render_phantom",
    "shepp_logan_spec",
    "tensor_read",
    "tensor_write",
]
