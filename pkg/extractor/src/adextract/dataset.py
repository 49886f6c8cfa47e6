"""Image-folder scanning, loading, and flip/rotate augmentation replicas.

The dataset root holds two path levels: ``<split>/<kind>/<image>``, e.g.
``train/good/001.png`` or ``test/scratch/007.jpg``. The category string is
``split/kind``; anything whose kind is not ``good`` is labeled anomalous.
Augmentation replicas index into the dihedral group spanned by horizontal
flips and 90-degree rotations; replica 0 is always the identity, and the
transform for replica r of an image is a deterministic function of
(r, relative path), so reruns reproduce the same features.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import torch
from PIL import Image

from .errors import ExtractError

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".webp")

AUGMENT_MODES = ("none", "flip", "rot90", "flip+rot90")

# ImageNet channel statistics used by every supported backbone
_MEAN = torch.tensor([0.485, 0.456, 0.406]).view(3, 1, 1)
_STD = torch.tensor([0.229, 0.224, 0.225]).view(3, 1, 1)


@dataclass(frozen=True)
class ImageRecord:
    relpath: str  # forward-slash path relative to the dataset root
    category: str  # "<split>/<kind>"
    label: int  # 1 unless kind == "good"

    @property
    def in_train_split(self) -> bool:
        return self.category.startswith("train")


def scan_images(root) -> list[ImageRecord]:
    """All images under root in sorted relative-path order."""
    root = Path(root)
    if not root.is_dir():
        raise ExtractError(f"dataset root {root} is not a directory")
    records = []
    for path in sorted(root.rglob("*")):
        if not (path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES):
            continue
        rel = path.relative_to(root)
        if len(rel.parts) != 3:
            raise ExtractError(
                f"image {rel.as_posix()} is not in the split/kind/image layout"
            )
        split, kind, _ = rel.parts
        records.append(
            ImageRecord(
                relpath=rel.as_posix(),
                category=f"{split}/{kind}",
                label=0 if kind == "good" else 1,
            )
        )
    if not records:
        raise ExtractError(f"no images found under {root}")
    return records


def load_image(path, resolution: int) -> torch.Tensor:
    """Decode, resize (bilinear), and normalize one image to a 3 x R x R tensor."""
    with Image.open(path) as img:
        rgb = img.convert("RGB").resize((resolution, resolution), Image.BILINEAR)
    raw = torch.frombuffer(bytearray(rgb.tobytes()), dtype=torch.uint8)
    chw = raw.view(resolution, resolution, 3).permute(2, 0, 1).float() / 255.0
    return (chw - _MEAN) / _STD


def group_elements(mode: str) -> list[tuple[bool, int]]:
    """(flip?, quarter-turns) pairs of the chosen augmentation group."""
    if mode not in AUGMENT_MODES:
        raise ExtractError(f"unknown augmentation '{mode}' (expected one of {AUGMENT_MODES})")
    flips = (False, True) if "flip" in mode else (False,)
    turns = (0, 1, 2, 3) if "rot90" in mode else (0,)
    return [(f, t) for f in flips for t in turns]


def replica_transform(mode: str, relpath: str, replica: int) -> tuple[bool, int]:
    """Group element used for one replica of one image (replica 0 = identity)."""
    if replica == 0:
        return (False, 0)
    elements = group_elements(mode)
    digest = hashlib.sha256(f"{replica}:{relpath}".encode("utf-8")).digest()
    return elements[int.from_bytes(digest[:8], "little") % len(elements)]


def apply_transform(chw: torch.Tensor, element: tuple[bool, int]) -> torch.Tensor:
    flip, turns = element
    if flip:
        chw = torch.flip(chw, dims=(2,))
    if turns:
        chw = torch.rot90(chw, k=turns, dims=(1, 2))
    return chw
