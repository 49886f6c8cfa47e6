"""Writers for the interchange formats the detection side consumes.

ADFV matrix files carry a 16-byte header (magic ``ADFV``, then version,
row count, and column count as little-endian uint32) followed by the
float32 payload in row-major order. The dataset manifest is sorted-key
JSON naming one feature file per level plus a labels CSV with header
``sample_id,label,category``; row order in the CSV matches row order in
every feature file. All writes go through a temp file and an atomic
rename so readers never observe partial output.
"""

from __future__ import annotations

import io
import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import ExtractError

ADFV_MAGIC = b"ADFV"
ADFV_VERSION = 1
_HEADER = struct.Struct("<III")

MANIFEST_VERSION = 1


def atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_matrix(path, matrix) -> None:
    """Write a 2-D float matrix as an ADFV file (binary32, row-major)."""
    m = np.asarray(matrix, dtype=np.float32)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ExtractError(f"feature matrix must be 2-D and non-empty, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ExtractError("feature matrix contains non-finite values")
    buf = io.BytesIO()
    buf.write(ADFV_MAGIC)
    buf.write(_HEADER.pack(ADFV_VERSION, m.shape[0], m.shape[1]))
    buf.write(np.ascontiguousarray(m).tobytes())
    atomic_write_bytes(path, buf.getvalue())


def write_labels(path, rows) -> None:
    """Labels CSV: one (sample_id, label, category) row per sample."""
    lines = ["sample_id,label,category"]
    for sample_id, label, category in rows:
        if "," in sample_id or "," in category:
            raise ExtractError(f"sample id or category contains a comma: {sample_id!r}")
        if label not in (0, 1):
            raise ExtractError(f"label must be 0 or 1, got {label!r}")
        lines.append(f"{sample_id},{label},{category}")
    atomic_write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


def write_manifest(path, model_id: str, levels, labels_path: str, sample_count: int) -> None:
    """Manifest JSON; `levels` is an iterable of (level_name, dim, file_path)."""
    doc = {
        "format_version": MANIFEST_VERSION,
        "model_id": model_id,
        "pooling": "average",
        "levels": [
            {"level_name": name, "dim": int(dim), "file_path": file_path}
            for name, dim, file_path in levels
        ],
        "labels_path": labels_path,
        "sample_count": int(sample_count),
    }
    payload = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    atomic_write_bytes(path, payload.encode("utf-8"))
