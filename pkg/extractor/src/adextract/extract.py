"""Extraction pipeline: images -> per-level pooled features on disk.

Augmentation replicas multiply the training split only; test images always
contribute exactly one row (the identity replica), so evaluation semantics
do not depend on the augmentation settings. Unreadable images are skipped
with a warning and listed in ``skipped.txt`` next to the outputs.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .backbones import BACKBONES, Backbone
from .dataset import (
    AUGMENT_MODES,
    apply_transform,
    load_image,
    replica_transform,
    scan_images,
)
from .errors import ExtractError
from .formats import write_labels, write_manifest, write_matrix


@dataclass(frozen=True)
class ExtractionConfig:
    data_root: str
    backbone: str
    out_dir: str
    resolution: int = 224
    augment: str = "none"
    epochs: int = 1
    weights: str = "pretrained"
    batch_size: int = 16
    levels: tuple | None = None
    model_id: str | None = None

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ExtractError(f"unknown backbone '{self.backbone}' (expected one of {BACKBONES})")
        if self.augment not in AUGMENT_MODES:
            raise ExtractError(f"unknown augmentation '{self.augment}'")
        if self.epochs < 1:
            raise ExtractError(f"epochs must be >= 1, got {self.epochs}")
        if self.augment == "none" and self.epochs != 1:
            raise ExtractError("epochs must be 1 when augmentation is 'none'")
        if self.resolution < 32:
            raise ExtractError(f"resolution must be >= 32, got {self.resolution}")
        if self.batch_size < 1:
            raise ExtractError(f"batch size must be >= 1, got {self.batch_size}")

    @property
    def effective_model_id(self) -> str:
        if self.model_id:
            return self.model_id
        return f"{self.backbone}-{self.weights}-{self.resolution}"


def _select_levels(backbone: Backbone, wanted) -> list[str]:
    if wanted is None:
        return list(backbone.level_names)
    missing = [w for w in wanted if w not in backbone.level_names]
    if missing:
        raise ExtractError(
            f"backbone {backbone.name} has no level(s) {missing}; "
            f"available: {backbone.level_names}"
        )
    return [name for name in backbone.level_names if name in set(wanted)]


def run_extraction(config: ExtractionConfig) -> dict:
    """Extract features per the config; returns a small summary dict."""
    backbone = Backbone(config.backbone, config.weights)
    levels = _select_levels(backbone, config.levels)
    records = scan_images(config.data_root)
    root = Path(config.data_root)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    # one work item per (image, replica); test images get only replica 0
    work = []
    skipped = []
    for rec in records:
        replicas = range(config.epochs) if rec.in_train_split else range(1)
        try:
            base = load_image(root / rec.relpath, config.resolution)
        except Exception as exc:
            reason = " ".join(str(exc).split()) or exc.__class__.__name__
            print(f"warning: skipping {rec.relpath}: {reason}", file=sys.stderr)
            skipped.append((rec.relpath, reason))
            continue
        for r in replicas:
            element = replica_transform(config.augment, rec.relpath, r)
            work.append((rec, r, apply_transform(base, element)))
    if not work:
        raise ExtractError("every image failed to load; nothing to extract")

    features = {name: [] for name in levels}
    for start in range(0, len(work), config.batch_size):
        chunk = work[start : start + config.batch_size]
        batch = torch.stack([chw for _, _, chw in chunk])
        pooled = backbone.pooled_levels(batch)
        for name in levels:
            features[name].append(pooled[name].numpy().astype(np.float32))

    rows = {name: np.concatenate(parts, axis=0) for name, parts in features.items()}
    for name, m in rows.items():
        if not np.isfinite(m).all():
            raise ExtractError(f"level {name}: non-finite pooled features")

    sample_rows = [(f"{rec.relpath}#r{r}", rec.label, rec.category) for rec, r, _ in work]
    write_labels(out / "labels.csv", sample_rows)
    entries = []
    for name in levels:
        file_name = f"{name}.adfv"
        write_matrix(out / file_name, rows[name])
        entries.append((name, rows[name].shape[1], file_name))
    write_manifest(
        out / "manifest.json",
        model_id=config.effective_model_id,
        levels=entries,
        labels_path="labels.csv",
        sample_count=len(work),
    )
    if skipped:
        lines = [f"{relpath}\t{reason}" for relpath, reason in skipped]
        (out / "skipped.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")

    return {
        "model_id": config.effective_model_id,
        "levels": {name: int(rows[name].shape[1]) for name in levels},
        "rows": len(work),
        "images": len(records) - len(skipped),
        "skipped": len(skipped),
    }
