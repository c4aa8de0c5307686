"""Encoder-decoder inpainting networks: partial-conv and conventional-conv.

Five stride-2 encoder layers, five decoder stages (nearest 2x upsample,
concat the encoder skip, stride-1 conv). ReLU in the encoder, leaky ReLU
(0.2) in the decoder, linear single-channel output: line integrals are
unbounded, so no squashing at the end.

The partial variant threads a single-channel validity mask through every
layer; at a decoder stage the upsampled deep mask and the skip mask are
merged with elementwise max (any valid input validates the window). The
conventional variant takes the mask as a second input channel and is plain
conv2d everywhere after that.
"""

from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .pconv import MaskedImage, pconv2d
from .rng import Rng

VARIANTS = ("partial", "conventional")


@dataclass(frozen=True)
class UNetSpec:
    variant: str = "partial"
    enc_channels: tuple = (16, 32, 64, 128, 128)
    enc_kernels: tuple = (7, 5, 3, 3, 3)
    enc_strides: tuple = (2, 2, 2, 2, 2)
    dec_channels: tuple = (128, 64, 32, 16, 1)
    dec_kernel: int = 3
    leaky_slope: float = 0.2

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"UNetSpec: unknown variant {self.variant!r}")
        if not (len(self.enc_channels) == len(self.enc_kernels)
                == len(self.enc_strides) == len(self.dec_channels)):
            raise ValueError("UNetSpec: encoder/decoder layer lists must have equal length")
        if self.dec_channels[-1] != 1:
            raise ValueError("UNetSpec: final decoder layer must emit 1 channel")

    @property
    def depth(self):
        return len(self.enc_channels)

    @property
    def in_channels(self):
        # conventional nets see the mask as an extra data channel
        return 1 if self.variant == "partial" else 2

    def resolution_multiple(self):
        return 2 ** self.depth


def spec_to_text(spec: UNetSpec) -> str:
    lines = [
        f"variant={spec.variant}",
        "enc_channels=" + ",".join(map(str, spec.enc_channels)),
        "enc_kernels=" + ",".join(map(str, spec.enc_kernels)),
        "enc_strides=" + ",".join(map(str, spec.enc_strides)),
        "dec_channels=" + ",".join(map(str, spec.dec_channels)),
        f"dec_kernel={spec.dec_kernel}",
        f"leaky_slope={spec.leaky_slope}",
    ]
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> UNetSpec:
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, val = line.partition("=")
        kv[key.strip()] = val.strip()

    def ints(s):
        return tuple(int(v) for v in s.split(","))

    return UNetSpec(
        variant=kv["variant"],
        enc_channels=ints(kv["enc_channels"]),
        enc_kernels=ints(kv["enc_kernels"]),
        enc_strides=ints(kv["enc_strides"]),
        dec_channels=ints(kv["dec_channels"]),
        dec_kernel=int(kv["dec_kernel"]),
        leaky_slope=float(kv["leaky_slope"]),
    )


def _layer_shapes(spec: UNetSpec):
    """(name, out_ch, in_ch, k) for every layer, encoder then decoder."""
    shapes = []
    c_in = spec.in_channels
    for i, (c_out, k) in enumerate(zip(spec.enc_channels, spec.enc_kernels)):
        shapes.append((f"enc{i + 1}", c_out, c_in, k))
        c_in = c_out
    skip_chs = list(spec.enc_channels[:-1])[::-1] + [spec.in_channels]
    for i, c_out in enumerate(spec.dec_channels):
        shapes.append((f"dec{i + 1}", c_out, c_in + skip_chs[i], spec.dec_kernel))
        c_in = c_out
    return shapes


class UNet:
    """A spec plus its parameters; forward() builds a fresh graph each call."""

    def __init__(self, spec: UNetSpec, params=None, seed=0, dtype=np.float32):
        self.spec = spec
        self.dtype = dtype
        if params is None:
            params = init_params(spec, Rng(seed), dtype)
        self.params = params  # {name: Parameter}

    def parameters(self):
        return list(self.params.values())

    def param_count(self):
        return sum(p.value.size for p in self.parameters())

    def forward(self, x: MaskedImage):
        """Returns (prediction node [N,1,H,W], final mask array or None)."""
        spec = self.spec
        h, w = x.data.shape[2], x.data.shape[3]
        mult = spec.resolution_multiple()
        if h % mult or w % mult:
            raise ValueError(
                f"unet: resolution {h}x{w} must be a multiple of {mult} "
                f"for a depth-{spec.depth} network"
            )
        if x.data.dtype != self.dtype:
            raise ValueError(f"unet: input dtype {x.data.dtype}, network is {self.dtype}")

        if spec.variant == "partial":
            return self._forward_partial(x)
        return self._forward_conventional(x)

    def _layer(self, name):
        return self.params[f"{name}.w"], self.params[f"{name}.b"]

    def _forward_partial(self, x: MaskedImage):
        spec = self.spec
        cur = ag.constant(x.data)
        mask = x.mask.astype(self.dtype)
        skips = [(cur, mask)]
        for i, (k, s) in enumerate(zip(spec.enc_kernels, spec.enc_strides)):
            w, b = self._layer(f"enc{i + 1}")
            cur, mask = pconv2d(cur, mask, w, b, stride=s, pad=(k - 1) // 2)
            cur = ag.relu(cur)
            skips.append((cur, mask))
        skips.pop()  # bottleneck is not its own skip
        for i in range(spec.depth):
            w, b = self._layer(f"dec{i + 1}")
            cur = ag.upsample_nearest2x(cur)
            mask = np.repeat(np.repeat(mask, 2, axis=2), 2, axis=3)
            skip_x, skip_m = skips.pop()
            cur = ag.concat_channels(cur, skip_x)
            mask = np.maximum(mask, skip_m)
            cur, mask = pconv2d(cur, mask, w, b, stride=1, pad=(spec.dec_kernel - 1) // 2)
            if i < spec.depth - 1:
                cur = ag.leaky_relu(cur, spec.leaky_slope)
        return cur, mask

    def _forward_conventional(self, x: MaskedImage):
        # mask becomes an input channel; hole values pass through untouched,
        # so hole perturbations CAN move the output (unlike the partial net)
        spec = self.spec
        inp = np.concatenate([x.data, x.mask.astype(self.dtype)], axis=1)
        cur = ag.constant(inp)
        skips = [cur]
        for i, (k, s) in enumerate(zip(spec.enc_kernels, spec.enc_strides)):
            w, b = self._layer(f"enc{i + 1}")
            cur = ag.conv2d(cur, w, b, stride=s, pad=(k - 1) // 2)
            cur = ag.relu(cur)
            skips.append(cur)
        skips.pop()
        for i in range(spec.depth):
            w, b = self._layer(f"dec{i + 1}")
            cur = ag.upsample_nearest2x(cur)
            cur = ag.concat_channels(cur, skips.pop())
            cur = ag.conv2d(cur, w, b, stride=1, pad=(spec.dec_kernel - 1) // 2)
            if i < spec.depth - 1:
                cur = ag.leaky_relu(cur, spec.leaky_slope)
        return cur, None

    def load_values(self, values):
        """Overwrite parameters from {name: ndarray} (a loaded checkpoint)."""
        missing = set(self.params) - set(values)
        extra = set(values) - set(self.params)
        if missing or extra:
            raise ValueError(
                f"checkpoint does not match spec (missing {sorted(missing)}, extra {sorted(extra)})"
            )
        for name, p in self.params.items():
            arr = np.asarray(values[name], dtype=self.dtype)
            if arr.shape != p.value.shape:
                raise ValueError(
                    f"checkpoint param {name}: shape {arr.shape} != expected {p.value.shape}"
                )
            p.value = arr.copy()


def init_params(spec: UNetSpec, rng: Rng, dtype=np.float32):
    """He-normal weights (std = sqrt(2 / fan_in)), zero biases."""
    params = {}
    for name, c_out, c_in, k in _layer_shapes(spec):
        fan_in = c_in * k * k
        std = np.sqrt(2.0 / fan_in)
        w = np.array(rng.normals(c_out * fan_in), dtype=dtype).reshape(c_out, c_in, k, k) * dtype(std)
        b = np.zeros(c_out, dtype=dtype)
        params[f"{name}.w"] = ag.Parameter(w, f"{name}.w")
        params[f"{name}.b"] = ag.Parameter(b, f"{name}.b")
    return params


def conventional_params_from_partial(partial_params, spec_conv: UNetSpec):
    """Clone partial-variant weights into a conventional net, zero-filling the
    slots the extra mask input channel adds (first encoder layer and the last
    decoder concat). With an all-valid mask both nets then match exactly."""
    out = {}
    for name, c_out, c_in, k in _layer_shapes(spec_conv):
        src = partial_params[f"{name}.w"].value
        w = np.zeros((c_out, c_in, k, k), dtype=src.dtype)
        w[:, : src.shape[1]] = src
        out[f"{name}.w"] = ag.Parameter(w, f"{name}.w")
        out[f"{name}.b"] = ag.Parameter(partial_params[f"{name}.b"].value.copy(), f"{name}.b")
    return out
