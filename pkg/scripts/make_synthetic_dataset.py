#!/usr/bin/env python3
"""Write a synthetic multi-level feature dataset in the package's on-disk formats.

Normal samples are draws from one correlated Gaussian per level; anomalous
samples get a constant shift in every coordinate. The output directory holds
manifest.json, labels.csv, and one .adfv matrix per level, ready for the
gaussad CLI:

    python3 scripts/make_synthetic_dataset.py --out /tmp/demo
    gaussad fit --manifest /tmp/demo/manifest.json --out /tmp/demo-model
    gaussad kfold --manifest /tmp/demo/manifest.json
"""

import argparse
from pathlib import Path

import numpy as np

from gaussad.featurestore import (
    DatasetManifest,
    LabelTable,
    LevelEntry,
    save_manifest,
    write_labels,
    write_matrix,
)


def parse_levels(text):
    levels = {}
    for part in text.split(","):
        name, _, dim = part.strip().partition(":")
        if not name or not dim:
            raise SystemExit(f"bad --levels entry {part!r}; expected name:dim")
        levels[name] = int(dim)
    return levels


def build(out, levels, n_train, n_test_normal, n_test_anomalous, shift, seed, model_id):
    rng = np.random.default_rng(seed)
    ids, labels, cats = [], [], []
    for i in range(n_train):
        ids.append(f"train_good_{i:04d}")
        labels.append(0)
        cats.append("train/good")
    for i in range(n_test_normal):
        ids.append(f"test_good_{i:04d}")
        labels.append(0)
        cats.append("test/good")
    for i in range(n_test_anomalous):
        ids.append(f"test_defect_{i:04d}")
        labels.append(1)
        cats.append("test/defect")
    n = len(ids)
    entries = []
    for name in sorted(levels):
        D = levels[name]
        A = rng.normal(size=(D, D))
        X = rng.normal(size=(n, D)) @ A
        if n_test_anomalous:
            X[n_train + n_test_normal :] += shift
        write_matrix(out / f"{name}.adfv", X)
        entries.append(LevelEntry(name, D, f"{name}.adfv"))
    write_labels(LabelTable(tuple(ids), np.array(labels), tuple(cats)), out / "labels.csv")
    manifest = DatasetManifest(
        format_version=1,
        model_id=model_id,
        pooling="average",
        levels=tuple(entries),
        labels_path="labels.csv",
        sample_count=n,
    )
    save_manifest(manifest, out / "manifest.json")
    return n


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, type=Path, help="output directory")
    ap.add_argument("--levels", default="lvl_a:8,lvl_b:5,lvl_c:3",
                    help="comma-separated name:dim pairs (default 3 small levels)")
    ap.add_argument("--n-train", type=int, default=200)
    ap.add_argument("--n-test-normal", type=int, default=50)
    ap.add_argument("--n-test-anomalous", type=int, default=50)
    ap.add_argument("--shift", type=float, default=3.0,
                    help="constant added to every anomalous coordinate (default 3.0)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--model-id", default="synthetic-backbone")
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    n = build(args.out, parse_levels(args.levels), args.n_train, args.n_test_normal,
              args.n_test_anomalous, args.shift, args.seed, args.model_id)
    print(f"wrote {n} samples across {len(parse_levels(args.levels))} levels to {args.out}")


if __name__ == "__main__":
    main()
