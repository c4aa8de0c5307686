"""Run configuration: one flat key=value file drives the whole pipeline."""

import dataclasses
from dataclasses import dataclass

from .phantoms import PhantomConfig
from .projection import Geometry


@dataclass
class RunConfig:
    seed: int = 1
    # geometry (sinograms are n_angles x n_detectors; both must be
    # multiples of 32 for the depth-5 U-Nets)
    image_size: int = 128
    n_angles: int = 192
    n_detectors: int = 192
    detector_spacing: float = 0.015625    # = 1/64; detector row spans 3.0 image units
    # dataset
    n_train: int = 200
    n_val: int = 20
    n_test: int = 20
    # phantom randomization
    body_count_min: int = 2
    body_count_max: int = 6
    body_attn_min: float = 0.1
    body_attn_max: float = 0.5
    metal_count_min: int = 1
    metal_count_max: int = 3
    metal_axis_min: float = 0.04
    metal_axis_max: float = 0.10
    metal_attn_min: float = 8.0
    metal_attn_max: float = 15.0
    # training
    epochs: int = 20
    batch_size: int = 2
    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    hole_weight: float = 6.0
    tv_weight: float = 0.1
    # rendering window for PGM exports of reconstructions
    pgm_lo: float = 0.0
    pgm_hi: float = 1.2

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        for name in ("n_train", "n_val", "n_test", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def geometry(self) -> Geometry:
        return Geometry(
            n_angles=self.n_angles,
            n_detectors=self.n_detectors,
            spacing=self.detector_spacing,
            image_size=self.image_size,
        )

    def phantom_config(self) -> PhantomConfig:
        return PhantomConfig(
            body_count_range=(self.body_count_min, self.body_count_max),
            body_value_range=(self.body_attn_min, self.body_attn_max),
            metal_count_range=(self.metal_count_min, self.metal_count_max),
            metal_axis_range=(self.metal_axis_min, self.metal_axis_max),
            metal_value_range=(self.metal_attn_min, self.metal_attn_max),
        )


def config_to_text(cfg: RunConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        lines.append(f"{f.name}={getattr(cfg, f.name)!r}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str, base: RunConfig = None) -> RunConfig:
    """Parse key=value lines; unknown keys are an error, missing keys keep
    the defaults (or the values from `base`)."""
    cfg = dataclasses.replace(base) if base is not None else RunConfig()
    known = {f.name for f in dataclasses.fields(RunConfig)}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or key not in known:
            raise ValueError(f"bad config line: {line!r}")
        current = getattr(cfg, key)
        if isinstance(current, int):
            setattr(cfg, key, int(val))
        elif isinstance(current, float):
            setattr(cfg, key, float(val))
        else:
            setattr(cfg, key, val)
    cfg.__post_init__()
    return cfg


def load_config(path: str, base: RunConfig = None) -> RunConfig:
    with open(path) as fh:
        return config_from_text(fh.read(), base)


def save_config(cfg: RunConfig, path: str):
    with open(path, "w") as fh:
        fh.write(config_to_text(cfg))
