"""Command-line front end: one `extract` action over an image-folder dataset."""

from __future__ import annotations

import argparse
import json
import sys

from .backbones import BACKBONES
from .dataset import AUGMENT_MODES
from .errors import ExtractError
from .extract import ExtractionConfig, run_extraction


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adextract",
        description="Extract block-level average-pooled deep features into ADFV files.",
    )
    parser.add_argument("--data", required=True, metavar="DIR",
                        help="dataset root with split/kind/image folders")
    parser.add_argument("--backbone", required=True, choices=BACKBONES)
    parser.add_argument("--out", required=True, metavar="DIR",
                        help="output directory for manifest, labels, and feature files")
    parser.add_argument("--resolution", type=int, default=224,
                        help="square input resolution (default 224)")
    parser.add_argument("--augment", choices=AUGMENT_MODES, default="none",
                        help="augmentation group for training replicas (default none)")
    parser.add_argument("--epochs", type=int, default=1,
                        help="augmentation replicas per training image (default 1)")
    parser.add_argument("--weights", choices=("pretrained", "random"), default="pretrained",
                        help="backbone weights; 'random' needs no downloads")
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--levels", default=None, metavar="NAME[,NAME...]",
                        help="restrict to these levels (default all)")
    parser.add_argument("--model-id", default=None,
                        help="manifest model id (default backbone-weights-resolution)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    levels = None
    if args.levels is not None:
        levels = tuple(n.strip() for n in args.levels.split(",") if n.strip())
    try:
        config = ExtractionConfig(
            data_root=args.data,
            backbone=args.backbone,
            out_dir=args.out,
            resolution=args.resolution,
            augment=args.augment,
            epochs=args.epochs,
            weights=args.weights,
            batch_size=args.batch_size,
            levels=levels,
            model_id=args.model_id,
        )
        summary = run_extraction(config)
    except ExtractError as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return 2
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
