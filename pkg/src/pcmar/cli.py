"""Command-line pipeline driver.

One binary, five subcommands: generate | train | inpaint | reconstruct |
evaluate. Common flags: --config <key=value file>, --seed <u64>, --out
<dir>. Exit code 0 on success; any failure prints a one-line diagnostic to
stderr and exits nonzero.
"""

import argparse
import os
import sys

from .config import RunConfig, load_config
from . import pipeline


def _add_common(p):
    p.add_argument("--config", help="key=value config file; missing keys keep defaults")
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.add_argument("--out", required=True, help="output directory")


def build_parser():
    ap = argparse.ArgumentParser(prog="pcmar", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="simulate train/val/test sample directories")
    _add_common(p)

    p = sub.add_parser("train", help="train one U-Net variant on a dataset")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset directory from `generate`")
    p.add_argument("--variant", required=True, choices=pipeline.NETWORK_METHODS)

    p = sub.add_parser("inpaint", help="fill metal traces for one split")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=pipeline.SPLITS)
    p.add_argument("--method", required=True, choices=pipeline.INPAINT_METHODS)
    p.add_argument("--checkpoint", help="checkpoint directory (network methods)")

    p = sub.add_parser("reconstruct", help="filtered backprojection for one split")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=pipeline.SPLITS)
    p.add_argument("--source", required=True,
                   help='"clean", "corrupted", or an inpaint output directory')

    p = sub.add_parser("evaluate", help="metric report over inpainting methods")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="test", choices=pipeline.SPLITS)
    p.add_argument(
        "--method", action="append", required=True, metavar="NAME=SINO_DIR:RECON_DIR",
        help="repeatable; empty SINO_DIR means the builtin clean/corrupted sinogram",
    )
    return ap


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _parse_methods(specs):
    methods = {}
    for spec in specs:
        name, sep, paths = spec.partition("=")
        sino, sep2, recon = paths.partition(":")
        if not sep or not sep2 or not recon:
            raise ValueError(f"bad --method {spec!r}, expected NAME=SINO_DIR:RECON_DIR")
        methods[name] = (sino or None, recon)
    return methods


def _record_argv(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "command.txt"), "w") as fh:
        fh.write(" ".join(sys.argv) + "\n")


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        _record_argv(args.out)
        if args.command == "generate":
            pipeline.generate_dataset(cfg, args.out)
        elif args.command == "train":
            pipeline.train(cfg, args.data, args.variant, args.out)
        elif args.command == "inpaint":
            pipeline.inpaint(cfg, args.data, args.split, args.method, args.out,
                             checkpoint_dir=args.checkpoint)
        elif args.command == "reconstruct":
            pipeline.reconstruct(cfg, args.data, args.split, args.source, args.out)
        elif args.command == "evaluate":
            pipeline.evaluate(cfg, args.data, args.split,
                              _parse_methods(args.method), args.out)
    except Exception as e:  # one-line diagnostic, nonzero exit
        print(f"pcmar {args.command}: error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
