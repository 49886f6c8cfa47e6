"""On-disk feature format (ADFV), dataset manifest, and label table.

An ADFV file stores a single n x D float32 matrix::

    bytes 0..3    magic "ADFV" (0x41 0x44 0x46 0x56)
    bytes 4..7    format version, u32 little-endian, currently 1
    bytes 8..11   rows, u32 little-endian
    bytes 12..15  cols, u32 little-endian
    bytes 16..    rows*cols IEEE-754 binary32 values, little-endian, row-major

Values are stored as binary32 for compactness; every statistic computed
downstream works in binary64.

A dataset is described by a UTF-8 JSON manifest with fields
``format_version``, ``model_id``, ``pooling``, ``levels``, ``labels_path``
and ``sample_count``. Each entry of ``levels`` is an object with keys
``level_name``, ``dim`` and ``file_path``. File paths are resolved relative
to the manifest's directory.

Labels live in a CSV with header ``sample_id,label,category``. The CSV row
order defines the row order of every level matrix (sample identity is
positional; ids exist for cross-checks and reporting). A sample belongs to
the training pool when its category starts with ``train``, otherwise to the
test pool.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError

ADFV_MAGIC = b"ADFV"
ADFV_VERSION = 1
MANIFEST_VERSION = 1

LABEL_NORMAL = 0
LABEL_ANOMALOUS = 1

_HEADER = struct.Struct("<III")  # version, rows, cols


def atomic_write_bytes(path, data: bytes) -> None:
    """Write a file atomically: temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


@dataclass(frozen=True)
class FeatureSet:
    """Feature matrix of one network level: n samples by D features."""

    level_name: str
    data: np.ndarray
    sample_ids: tuple[str, ...]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise DataError(f"feature matrix must be 2-D with n,D >= 1, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise DataError(f"level '{self.level_name}': non-finite feature values")
        if len(self.sample_ids) != data.shape[0]:
            raise DataError(
                f"level '{self.level_name}': {len(self.sample_ids)} sample ids "
                f"for {data.shape[0]} rows"
            )
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise DataError(f"level '{self.level_name}': duplicate sample ids")

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def write_matrix(path, matrix) -> None:
    """Write a 2-D array to `path` in the ADFV format (binary32 payload)."""
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise DataError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise DataError("refusing to write non-finite values")
    payload = np.ascontiguousarray(m, dtype="<f4")
    buf = io.BytesIO()
    buf.write(ADFV_MAGIC)
    buf.write(_HEADER.pack(ADFV_VERSION, m.shape[0], m.shape[1]))
    buf.write(payload.tobytes())
    atomic_write_bytes(path, buf.getvalue())


def read_matrix(path) -> np.ndarray:
    """Read an ADFV file, returning its matrix as float64."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[:4] != ADFV_MAGIC:
        raise DataError(f"{path}: bad magic")
    if len(raw) < 4 + _HEADER.size:
        raise DataError(f"{path}: truncated header")
    version, rows, cols = _HEADER.unpack_from(raw, 4)
    if version != ADFV_VERSION:
        raise DataError(f"{path}: unsupported version {version}")
    expected = rows * cols * 4
    body = raw[4 + _HEADER.size :]
    if len(body) < expected:
        raise DataError(f"{path}: truncated payload ({len(body)} bytes, expected {expected})")
    if len(body) > expected:
        raise DataError(f"{path}: trailing bytes after payload")
    flat = np.frombuffer(body, dtype="<f4", count=rows * cols)
    return flat.reshape(rows, cols).astype(np.float64)


def write_feature_file(fset: FeatureSet, path) -> None:
    """Persist a FeatureSet's matrix (ids and level name live in the manifest/labels)."""
    write_matrix(path, fset.data)


def read_feature_file(path, level_name: str = "", sample_ids=None) -> FeatureSet:
    """Read an ADFV file into a FeatureSet.

    ADFV files carry no ids; pass `sample_ids` to attach the canonical ones
    (as `load_dataset` does), otherwise positional ids are synthesized.
    """
    data = read_matrix(path)
    if sample_ids is None:
        sample_ids = tuple(f"row{i:06d}" for i in range(data.shape[0]))
    return FeatureSet(level_name=level_name, data=data, sample_ids=tuple(sample_ids))


@dataclass(frozen=True)
class LevelEntry:
    level_name: str
    dim: int
    file_path: str


@dataclass(frozen=True)
class DatasetManifest:
    format_version: int
    model_id: str
    pooling: str
    levels: tuple[LevelEntry, ...]
    labels_path: str
    sample_count: int

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise DataError("manifest declares no levels")
        names = [lv.level_name for lv in self.levels]
        if len(set(names)) != len(names):
            raise DataError("manifest level_names are not unique")
        if self.pooling != "average":
            raise DataError(f"unsupported pooling '{self.pooling}'")
        if self.sample_count < 1:
            raise DataError("sample_count must be >= 1")


@dataclass(frozen=True)
class LabelTable:
    """Per-sample labels in canonical row order.

    label is 0 (normal) or 1 (anomalous); category is the source folder
    string ("train/good", "test/crack", ...). Pool membership derives from
    the category prefix.
    """

    sample_ids: tuple[str, ...]
    labels: np.ndarray
    categories: tuple[str, ...]
    _index: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=np.int64))
        object.__setattr__(self, "categories", tuple(self.categories))
        n = len(self.sample_ids)
        if self.labels.shape != (n,) or len(self.categories) != n:
            raise DataError("label table columns have inconsistent lengths")
        if not np.isin(self.labels, (LABEL_NORMAL, LABEL_ANOMALOUS)).all():
            raise DataError("labels must be 0 (normal) or 1 (anomalous)")
        index = {sid: i for i, sid in enumerate(self.sample_ids)}
        if len(index) != n:
            seen = set()
            for sid in self.sample_ids:
                if sid in seen:
                    raise DataError(f"duplicate sample_id '{sid}' in labels")
                seen.add(sid)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.sample_ids)

    def label_of(self, sample_id: str) -> int:
        self.require([sample_id])
        return int(self.labels[self._index[sample_id]])

    def require(self, sample_ids) -> None:
        """Raise a DataError naming the first id without a label."""
        for sid in sample_ids:
            if sid not in self._index:
                raise DataError(f"no label for sample_id '{sid}'")

    def labels_for(self, sample_ids) -> np.ndarray:
        self.require(sample_ids)
        return np.array([self.labels[self._index[s]] for s in sample_ids], dtype=np.int64)

    def is_train(self, sample_id: str) -> bool:
        self.require([sample_id])
        return self.categories[self._index[sample_id]].startswith("train")

    @property
    def train_mask(self) -> np.ndarray:
        return np.array([c.startswith("train") for c in self.categories], dtype=bool)


def write_labels(table: LabelTable, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", "label", "category"])
    for sid, lab, cat in zip(table.sample_ids, table.labels, table.categories):
        writer.writerow([sid, int(lab), cat])
    atomic_write_text(path, buf.getvalue())


def read_labels(path) -> LabelTable:
    try:
        fh = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read labels file {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sample_id", "label", "category"]:
            raise DataError(f"{path}: expected header sample_id,label,category, got {header}")
        ids, labels, cats = [], [], []
        for row in reader:
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}: malformed row {row!r}")
            ids.append(row[0])
            try:
                labels.append(int(row[1]))
            except ValueError as exc:
                raise DataError(f"{path}: non-integer label {row[1]!r}") from exc
            cats.append(row[2])
    if not ids:
        raise DataError(f"{path}: empty labels file")
    return LabelTable(tuple(ids), np.array(labels), tuple(cats))


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "format_version": manifest.format_version,
        "model_id": manifest.model_id,
        "pooling": manifest.pooling,
        "levels": [
            {"level_name": lv.level_name, "dim": lv.dim, "file_path": lv.file_path}
            for lv in manifest.levels
        ],
        "labels_path": manifest.labels_path,
        "sample_count": manifest.sample_count,
    }
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_manifest(path) -> DatasetManifest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    required = ["format_version", "model_id", "pooling", "levels", "labels_path", "sample_count"]
    missing = [k for k in required if k not in doc]
    if missing:
        raise DataError(f"{path}: manifest missing fields {missing}")
    if doc["format_version"] != MANIFEST_VERSION:
        raise DataError(f"{path}: unsupported manifest format_version {doc['format_version']}")
    levels = []
    for entry in doc["levels"]:
        try:
            levels.append(
                LevelEntry(
                    level_name=str(entry["level_name"]),
                    dim=int(entry["dim"]),
                    file_path=str(entry["file_path"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: malformed level entry {entry!r}") from exc
    return DatasetManifest(
        format_version=int(doc["format_version"]),
        model_id=str(doc["model_id"]),
        pooling=str(doc["pooling"]),
        levels=tuple(levels),
        labels_path=str(doc["labels_path"]),
        sample_count=int(doc["sample_count"]),
    )


def load_dataset(manifest_path) -> tuple[DatasetManifest, list[FeatureSet], LabelTable]:
    """Load every level declared in a manifest plus the joined label table.

    All levels share the label CSV's row order; shapes are cross-checked
    against the manifest before any matrix is accepted.
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    base = manifest_path.parent
    labels = read_labels(base / manifest.labels_path)
    if len(labels) != manifest.sample_count:
        raise DataError(
            f"labels file lists {len(labels)} samples but manifest declares "
            f"{manifest.sample_count}"
        )
    sets = []
    for lv in manifest.levels:
        fpath = base / lv.file_path
        if not fpath.exists():
            raise DataError(f"level '{lv.level_name}': missing feature file {fpath}")
        data = read_matrix(fpath)
        if data.shape != (manifest.sample_count, lv.dim):
            raise DataError(
                f"level '{lv.level_name}': file shape {data.shape} does not match "
                f"manifest ({manifest.sample_count}, {lv.dim})"
            )
        sets.append(FeatureSet(lv.level_name, data, labels.sample_ids))
    return manifest, sets, labels
