"""End-to-end workflow: generate -> train -> inpaint -> reconstruct -> evaluate.

Every stage is a plain function over directories of TNSR/text files, so
methods are compared only through their on-disk sinogram and reconstruction
artifacts, never through network internals. All stages are deterministic
given the config seed; two runs of the whole pipeline produce byte-identical
CSVs.
"""

import csv
import os
import time
from statistics import mean, median

import numpy as np

from .autograd import backward
from .baselines import linear_interp_inpaint
from .config import RunConfig, save_config
from .loss import composite_output, inpainting_loss
from .metrics import rmse, ssim
from .optim import Adam, load_checkpoint, save_checkpoint
from .pconv import MaskedImage
from .phantoms import render_metal_only
from .projection import fbp_reconstruct
from .rng import Rng, derive_seed
from .samples import load_sample, make_sample, save_sample
from .tensorio import pgm_export, tensor_read, tensor_write
from .unet import UNet, UNetSpec, init_params, spec_from_text, spec_to_text

SPLITS = ("train", "val", "test")
_TRAIN_STREAM = 2**32  # seed-derivation index reserved for training randomness
NETWORK_METHODS = ("partial", "conventional")
INPAINT_METHODS = NETWORK_METHODS + ("linear",)


def _check_network_resolution(n_angles, n_detectors):
    if n_angles % 32 or n_detectors % 32:
        raise ValueError(
            f"sinogram shape {n_angles}x{n_detectors} must be a multiple of 32 "
            f"in both dimensions for the depth-5 U-Nets"
        )


def _sample_name(i):
    return f"sample_{i:04d}"


def generate_dataset(cfg: RunConfig, out_dir: str):
    """Write train/val/test sample directories plus manifest and config."""
    _check_network_resolution(cfg.n_angles, cfg.n_detectors)
    geo = cfg.geometry()
    pcfg = cfg.phantom_config()
    os.makedirs(out_dir, exist_ok=True)
    save_config(cfg, os.path.join(out_dir, "config.txt"))
    counts = {"train": cfg.n_train, "val": cfg.n_val, "test": cfg.n_test}
    manifest = []
    index = 0
    for split in SPLITS:
        for _ in range(counts[split]):
            seed = derive_seed(cfg.seed, index)
            sample = make_sample(Rng(seed), geo, pcfg)
            name = _sample_name(index)
            save_sample(os.path.join(out_dir, split, name), sample)
            manifest.append(f"{split}\t{name}\t{seed}\n")
            index += 1
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.writelines(manifest)
    return out_dir


def split_dirs(data_dir: str, split: str):
    """Sorted sample directories of one split."""
    root = os.path.join(data_dir, split)
    if not os.path.isdir(root):
        raise FileNotFoundError(f"dataset split not found: {root}")
    names = sorted(d for d in os.listdir(root) if os.path.isdir(os.path.join(root, d)))
    if not names:
        raise FileNotFoundError(f"dataset split is empty: {root}")
    return [(name, os.path.join(root, name)) for name in names]


def _load_split_arrays(data_dir, split):
    """(names, clean [S,A,D], corrupted, mask) stacked as float32."""
    names, clean, corrupted, mask = [], [], [], []
    for name, path in split_dirs(data_dir, split):
        s = load_sample(path)
        names.append(name)
        clean.append(s.sinograms.clean)
        corrupted.append(s.sinograms.corrupted)
        mask.append(s.sinograms.trace_mask)
    return names, np.stack(clean), np.stack(corrupted), np.stack(mask)


def _net_input(corrupted, mask):
    """Network input pair: zero-filled holes plus the validity mask."""
    data = (corrupted * mask)[:, None]
    return MaskedImage(data.astype(np.float32), mask[:, None].astype(np.float32))


def train(cfg: RunConfig, data_dir: str, variant: str, out_dir: str, log=print):
    """Train one U-Net variant; returns the path of the best checkpoint.

    Writes loss.csv (step,total,valid,hole,tv), val.csv (epoch,hole_rmse),
    an epoch checkpoint directory per epoch, and best/ tracking the lowest
    validation hole RMSE. Aborts on non-finite loss.
    """
    if variant not in NETWORK_METHODS:
        raise ValueError(f"train: unknown variant {variant!r}")
    _, tr_clean, tr_corr, tr_mask = _load_split_arrays(data_dir, "train")
    _, va_clean, va_corr, va_mask = _load_split_arrays(data_dir, "val")
    _check_network_resolution(tr_clean.shape[1], tr_clean.shape[2])

    os.makedirs(out_dir, exist_ok=True)
    save_config(cfg, os.path.join(out_dir, "config.txt"))
    spec = UNetSpec(variant=variant)
    with open(os.path.join(out_dir, "unet.txt"), "w") as fh:
        fh.write(spec_to_text(spec))

    rng = Rng(derive_seed(cfg.seed, _TRAIN_STREAM))
    net = UNet(spec, params=init_params(spec, rng))
    adam = Adam(net.parameters(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)

    n_train = tr_clean.shape[0]
    step = 0
    best_val = None
    best_dir = os.path.join(out_dir, "checkpoints", "best")
    loss_rows = []
    val_rows = []
    t0 = time.time()
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_train)
        epoch_losses = []
        for lo in range(0, n_train, cfg.batch_size):
            idx = order[lo:lo + cfg.batch_size]
            x = _net_input(tr_corr[idx], tr_mask[idx])
            target = tr_clean[idx][:, None]
            pred, _ = net.forward(x)
            lb = inpainting_loss(pred, target, x.mask, data=x.data,
                                 hole_weight=cfg.hole_weight, tv_weight=cfg.tv_weight)
            total = float(lb.total.value)
            if not np.isfinite(total):
                raise RuntimeError(f"train: non-finite loss at step {step}")
            adam.zero_grad()
            backward(lb.total)
            adam.step()
            loss_rows.append((step, total, lb.valid, lb.hole, lb.tv))
            epoch_losses.append(total)
            step += 1

        val_metric = _validation_hole_rmse(net, va_clean, va_corr, va_mask)
        val_rows.append((epoch, val_metric))
        ckpt = os.path.join(out_dir, "checkpoints", f"epoch_{epoch:03d}")
        save_checkpoint(net.parameters(), ckpt)
        with open(os.path.join(ckpt, "unet.txt"), "w") as fh:
            fh.write(spec_to_text(spec))
        if best_val is None or val_metric < best_val:
            best_val = val_metric
            save_checkpoint(net.parameters(), best_dir)
            with open(os.path.join(best_dir, "unet.txt"), "w") as fh:
                fh.write(spec_to_text(spec))
        log(f"[{variant}] epoch {epoch:3d}/{cfg.epochs}  "
            f"loss {mean(epoch_losses):.5f}  val hole RMSE {val_metric:.5f}  "
            f"({time.time() - t0:.0f}s)")

    with open(os.path.join(out_dir, "loss.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "total", "valid", "hole", "tv"])
        for row in loss_rows:
            w.writerow([row[0]] + [repr(v) for v in row[1:]])
    with open(os.path.join(out_dir, "val.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "hole_rmse"])
        for epoch, v in val_rows:
            w.writerow([epoch, repr(v)])
    return best_dir


def _validation_hole_rmse(net, clean, corrupted, mask):
    vals = []
    for i in range(clean.shape[0]):
        x = _net_input(corrupted[i:i + 1], mask[i:i + 1])
        pred, _ = net.forward(x)
        comp = composite_output(pred.value[0, 0], corrupted[i], mask[i])
        holes = mask[i] == 0
        if holes.any():
            vals.append(rmse(comp[holes], clean[i][holes]))
    return mean(vals) if vals else 0.0


def load_network(checkpoint_dir: str) -> UNet:
    spec_path = os.path.join(checkpoint_dir, "unet.txt")
    if not os.path.exists(spec_path):
        raise FileNotFoundError(f"no unet.txt in checkpoint {checkpoint_dir}")
    with open(spec_path) as fh:
        spec = spec_from_text(fh.read())
    net = UNet(spec)
    net.load_values(load_checkpoint(checkpoint_dir))
    return net


def inpaint(cfg: RunConfig, data_dir: str, split: str, method: str, out_dir: str,
            checkpoint_dir: str = None):
    """Fill the metal trace of every sample's corrupted sinogram.

    Network methods composite their prediction back over the measured valid
    pixels; valid pixels therefore pass through every method untouched.
    """
    if method not in INPAINT_METHODS:
        raise ValueError(f"inpaint: unknown method {method!r}")
    net = None
    if method in NETWORK_METHODS:
        if checkpoint_dir is None:
            raise ValueError(f"inpaint: method {method!r} needs a checkpoint")
        net = load_network(checkpoint_dir)
        if net.spec.variant != method:
            raise ValueError(
                f"inpaint: checkpoint is variant {net.spec.variant!r}, requested {method!r}"
            )
    os.makedirs(out_dir, exist_ok=True)
    save_config(cfg, os.path.join(out_dir, "config.txt"))
    for name, path in split_dirs(data_dir, split):
        s = load_sample(path)
        corrupted, mask = s.sinograms.corrupted, s.sinograms.trace_mask
        if method == "linear":
            filled = linear_interp_inpaint(corrupted, mask)
        else:
            x = _net_input(corrupted[None], mask[None])
            pred, _ = net.forward(x)
            filled = composite_output(pred.value[0, 0], corrupted, mask)
        if not np.all(np.isfinite(filled)):
            raise RuntimeError(f"inpaint: non-finite output for {name}")
        dest = os.path.join(out_dir, split, name)
        os.makedirs(dest, exist_ok=True)
        tensor_write(filled.astype(np.float32), os.path.join(dest, "inpainted.tnsr"))
    return out_dir


def reconstruct(cfg: RunConfig, data_dir: str, split: str, source: str, out_dir: str):
    """FBP every sample of a split; writes recon.tnsr and recon.pgm.

    `source` is "clean", "corrupted", or the output directory of an
    inpaint run.
    """
    os.makedirs(out_dir, exist_ok=True)
    save_config(cfg, os.path.join(out_dir, "config.txt"))
    for name, path in split_dirs(data_dir, split):
        s = load_sample(path)
        if source == "clean":
            sino = s.sinograms.clean
        elif source == "corrupted":
            sino = s.sinograms.corrupted
        else:
            sino_path = os.path.join(source, split, name, "inpainted.tnsr")
            if not os.path.exists(sino_path):
                raise FileNotFoundError(f"reconstruct: missing sinogram {sino_path}")
            sino = tensor_read(sino_path)
        img = fbp_reconstruct(sino, s.sinograms.geometry)
        dest = os.path.join(out_dir, split, name)
        os.makedirs(dest, exist_ok=True)
        tensor_write(img, os.path.join(dest, "recon.tnsr"))
        pgm_export(img, os.path.join(dest, "recon.pgm"), cfg.pgm_lo, cfg.pgm_hi)
    return out_dir


def evaluate(cfg: RunConfig, data_dir: str, split: str, methods: dict, out_dir: str):
    """Per-sample and aggregate metrics; methods = {name: (sino_root, recon_root)}.

    sino_root None means the builtin sinogram of that name ("clean" or
    "corrupted"). Metal-excluded metrics drop exactly the pixels where the
    metal-only phantom is positive. Writes metrics.csv and summary.txt.
    """
    os.makedirs(out_dir, exist_ok=True)
    save_config(cfg, os.path.join(out_dir, "config.txt"))
    rows = []
    per_method = {m: {"sino_rmse_hole": [], "sino_rmse_full": [],
                      "recon_rmse": [], "recon_ssim": []} for m in methods}
    for name, path in split_dirs(data_dir, split):
        s = load_sample(path)
        clean = s.sinograms.clean
        holes = s.sinograms.trace_mask == 0
        metal_free = render_metal_only(s.spec, s.phantom.shape[0]) <= 0
        data_range = float(s.phantom.max())
        for method, (sino_root, recon_root) in methods.items():
            if sino_root is None:
                if method == "clean":
                    sino = clean
                elif method == "corrupted":
                    sino = s.sinograms.corrupted
                else:
                    raise ValueError(f"evaluate: method {method!r} has no sinogram source")
            else:
                sino_path = os.path.join(sino_root, split, name, "inpainted.tnsr")
                if not os.path.exists(sino_path):
                    raise FileNotFoundError(f"evaluate: missing artifact {sino_path}")
                sino = tensor_read(sino_path)
            recon_path = os.path.join(recon_root, split, name, "recon.tnsr")
            if not os.path.exists(recon_path):
                raise FileNotFoundError(f"evaluate: missing artifact {recon_path}")
            recon = tensor_read(recon_path)
            m = {
                "sino_rmse_hole": rmse(sino, clean, include=holes) if holes.any() else 0.0,
                "sino_rmse_full": rmse(sino, clean),
                "recon_rmse": rmse(recon, s.phantom, include=metal_free),
                "recon_ssim": ssim(recon, s.phantom, data_range, include=metal_free),
            }
            rows.append([split, name, method] + [repr(m[k]) for k in
                        ("sino_rmse_hole", "sino_rmse_full", "recon_rmse", "recon_ssim")])
            for k, v in m.items():
                per_method[method][k].append(v)

    with open(os.path.join(out_dir, "metrics.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["split", "sample", "method",
                    "sino_rmse_hole", "sino_rmse_full", "recon_rmse", "recon_ssim"])
        w.writerows(rows)

    summary = _summarize(per_method)
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write(summary)
    return per_method


def _summarize(per_method):
    lines = []
    for method in per_method:
        stats = per_method[method]
        lines.append(f"method {method}:")
        for metric, vals in stats.items():
            lines.append(f"  {metric}: mean={mean(vals):.6g} median={median(vals):.6g}")
    names = list(per_method)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            for metric in ("sino_rmse_hole", "recon_rmse"):
                va, vb = per_method[a][metric], per_method[b][metric]
                wins = sum(1 for x, y in zip(va, vb) if x <= y)
                lines.append(
                    f"win-rate {a} <= {b} on {metric}: {wins}/{len(va)}"
                )
    return "\n".join(lines) + "\n"


def win_rate(per_method, a, b, metric="sino_rmse_hole"):
    """Fraction of samples where method a does at least as well as method b."""
    va, vb = per_method[a][metric], per_method[b][metric]
    return sum(1 for x, y in zip(va, vb) if x <= y) / len(va)
