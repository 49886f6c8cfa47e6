"""Shared fixtures: synthetic on-disk datasets in the package's formats."""

import numpy as np
import pytest

from gaussad.featurestore import (
    DatasetManifest,
    LabelTable,
    LevelEntry,
    save_manifest,
    write_labels,
    write_matrix,
)


def build_dataset(
    root,
    dims,
    n_train=80,
    n_test_normal=25,
    n_test_anomalous=25,
    shift=3.0,
    seed=0,
    model_id="synthetic-backbone",
):
    """Write a manifest + labels + one ADFV file per level under `root`.

    Normal samples are correlated Gaussians; anomalies are shifted by
    `shift` in every coordinate. Returns the manifest path.
    """
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
    levels = []
    for name in sorted(dims):
        D = dims[name]
        A = rng.normal(size=(D, D))
        X = rng.normal(size=(n, D)) @ A
        if n_test_anomalous:
            X[n_train + n_test_normal :] += shift
        write_matrix(root / f"{name}.adfv", X)
        levels.append(LevelEntry(name, D, f"{name}.adfv"))
    write_labels(LabelTable(tuple(ids), np.array(labels), tuple(cats)), root / "labels.csv")
    manifest = DatasetManifest(
        format_version=1,
        model_id=model_id,
        pooling="average",
        levels=tuple(levels),
        labels_path="labels.csv",
        sample_count=n,
    )
    path = root / "manifest.json"
    save_manifest(manifest, path)
    return path


@pytest.fixture
def dataset(tmp_path):
    """Small three-level dataset with well-separated anomalies."""
    return build_dataset(tmp_path, {"lvl_a": 8, "lvl_b": 5, "lvl_c": 3})
