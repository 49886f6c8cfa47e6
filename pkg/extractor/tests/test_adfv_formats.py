"""Byte-level checks of the extractor's interchange writers."""

import json
import struct

import numpy as np
import pytest

from adextract.errors import ExtractError
from adextract.formats import write_labels, write_manifest, write_matrix


class TestMatrixWriter:
    def test_single_cell_layout(self, tmp_path):
        path = tmp_path / "m.adfv"
        write_matrix(path, np.zeros((1, 1)))
        raw = path.read_bytes()
        assert len(raw) == 20
        assert raw[:4] == b"ADFV"
        version, rows, cols = struct.unpack("<III", raw[4:16])
        assert (version, rows, cols) == (1, 1, 1)
        assert struct.unpack("<f", raw[16:])[0] == 0.0

    def test_row_major_little_endian_payload(self, tmp_path):
        m = np.array([[1.5, -2.0, 3.25], [4.0, 5.5, -6.75]])
        path = tmp_path / "m.adfv"
        write_matrix(path, m)
        raw = path.read_bytes()
        assert struct.unpack("<III", raw[4:16]) == (1, 2, 3)
        values = struct.unpack("<6f", raw[16:])
        assert values == (1.5, -2.0, 3.25, 4.0, 5.5, -6.75)

    def test_rewrite_replaces_atomically(self, tmp_path):
        path = tmp_path / "m.adfv"
        write_matrix(path, np.ones((4, 4)))
        write_matrix(path, np.zeros((1, 2)))
        raw = path.read_bytes()
        assert len(raw) == 16 + 8
        assert not list(tmp_path.glob("m.adfv.*"))  # no temp file leftovers

    def test_rejections(self, tmp_path):
        with pytest.raises(ExtractError, match="2-D"):
            write_matrix(tmp_path / "x", np.zeros(3))
        with pytest.raises(ExtractError, match="non-empty"):
            write_matrix(tmp_path / "x", np.zeros((0, 3)))
        with pytest.raises(ExtractError, match="non-finite"):
            write_matrix(tmp_path / "x", np.array([[np.nan]]))


class TestLabelsWriter:
    def test_header_and_rows(self, tmp_path):
        path = tmp_path / "labels.csv"
        write_labels(path, [("a#r0", 0, "train/good"), ("b#r0", 1, "test/dent")])
        lines = path.read_text().splitlines()
        assert lines == [
            "sample_id,label,category",
            "a#r0,0,train/good",
            "b#r0,1,test/dent",
        ]

    def test_rejections(self, tmp_path):
        with pytest.raises(ExtractError, match="comma"):
            write_labels(tmp_path / "x", [("a,b", 0, "train/good")])
        with pytest.raises(ExtractError, match="label"):
            write_labels(tmp_path / "x", [("a", 2, "train/good")])


class TestManifestWriter:
    def test_schema(self, tmp_path):
        path = tmp_path / "manifest.json"
        write_manifest(
            path,
            model_id="net-x",
            levels=[("level_00", 32, "level_00.adfv"), ("level_01", 16, "level_01.adfv")],
            labels_path="labels.csv",
            sample_count=7,
        )
        text = path.read_text()
        assert text.endswith("\n")
        doc = json.loads(text)
        assert doc["format_version"] == 1
        assert doc["model_id"] == "net-x"
        assert doc["pooling"] == "average"
        assert doc["labels_path"] == "labels.csv"
        assert doc["sample_count"] == 7
        assert doc["levels"][0] == {
            "dim": 32,
            "file_path": "level_00.adfv",
            "level_name": "level_00",
        }

    def test_stable_bytes(self, tmp_path):
        args = dict(
            model_id="m",
            levels=[("level_00", 4, "level_00.adfv")],
            labels_path="labels.csv",
            sample_count=1,
        )
        write_manifest(tmp_path / "a.json", **args)
        write_manifest(tmp_path / "b.json", **args)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
