"""Extraction behavior: scanning, augmentation, determinism, skips."""

import struct

import numpy as np
import pytest
import torch

from adextract.dataset import (
    apply_transform,
    group_elements,
    load_image,
    replica_transform,
    scan_images,
)
from adextract.errors import ExtractError
from adextract.extract import ExtractionConfig, run_extraction

from helpers_imgds import make_image_folder


def read_adfv(path):
    raw = path.read_bytes()
    assert raw[:4] == b"ADFV"
    version, rows, cols = struct.unpack("<III", raw[4:16])
    assert version == 1
    return np.frombuffer(raw[16:], dtype="<f4").reshape(rows, cols)


class TestScan:
    def test_categories_and_labels(self, tmp_path):
        make_image_folder(tmp_path, {"train/good": 2, "test/good": 1, "test/dent": 1})
        records = scan_images(tmp_path)
        assert [r.relpath for r in records] == [
            "test/dent/000.png",
            "test/good/000.png",
            "train/good/000.png",
            "train/good/001.png",
        ]
        by_cat = {r.relpath: (r.category, r.label, r.in_train_split) for r in records}
        assert by_cat["train/good/000.png"] == ("train/good", 0, True)
        assert by_cat["test/good/000.png"] == ("test/good", 0, False)
        assert by_cat["test/dent/000.png"] == ("test/dent", 1, False)

    def test_wrong_layout_rejected(self, tmp_path):
        make_image_folder(tmp_path, {"train/good": 1})
        (tmp_path / "loose.png").write_bytes((tmp_path / "train/good/000.png").read_bytes())
        with pytest.raises(ExtractError, match="layout"):
            scan_images(tmp_path)

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ExtractError, match="no images"):
            scan_images(tmp_path)


class TestAugmentation:
    def test_group_sizes(self):
        assert len(group_elements("none")) == 1
        assert len(group_elements("flip")) == 2
        assert len(group_elements("rot90")) == 4
        assert len(group_elements("flip+rot90")) == 8

    def test_replica_zero_is_identity(self):
        for mode in ("none", "flip", "rot90", "flip+rot90"):
            assert replica_transform(mode, "a/b/c.png", 0) == (False, 0)

    def test_replica_choice_deterministic_and_in_group(self):
        for mode in ("flip", "rot90", "flip+rot90"):
            group = set(group_elements(mode))
            for r in (1, 2, 7):
                e1 = replica_transform(mode, "train/good/001.png", r)
                e2 = replica_transform(mode, "train/good/001.png", r)
                assert e1 == e2
                assert e1 in group

    def test_transforms_compose_to_identity(self):
        x = torch.randn(3, 8, 8)
        flipped = apply_transform(apply_transform(x, (True, 0)), (True, 0))
        assert torch.equal(flipped, x)
        once = apply_transform(x, (False, 1))
        four = once
        for _ in range(3):
            four = apply_transform(four, (False, 1))
        assert torch.equal(four, x)

    def test_load_image_shape_and_normalization(self, tmp_path):
        make_image_folder(tmp_path, {"train/good": 1}, size=30)
        chw = load_image(tmp_path / "train/good/000.png", resolution=40)
        assert chw.shape == (3, 40, 40)
        assert torch.isfinite(chw).all()
        assert chw.min() < 0 < chw.max()  # centered by channel statistics


class TestConfigInvariants:
    def _cfg(self, **kw):
        base = dict(data_root="d", backbone="resnet-18", out_dir="o")
        base.update(kw)
        return ExtractionConfig(**base)

    def test_defaults(self):
        cfg = self._cfg()
        assert cfg.resolution == 224
        assert cfg.effective_model_id == "resnet-18-pretrained-224"

    def test_augment_none_needs_single_epoch(self):
        with pytest.raises(ExtractError, match="epochs must be 1"):
            self._cfg(epochs=3)
        self._cfg(epochs=3, augment="flip")  # fine

    def test_rejections(self):
        with pytest.raises(ExtractError, match="backbone"):
            self._cfg(backbone="vgg-16")
        with pytest.raises(ExtractError, match="augmentation"):
            self._cfg(augment="blur")
        with pytest.raises(ExtractError, match="epochs"):
            self._cfg(epochs=0, augment="flip")
        with pytest.raises(ExtractError, match="resolution"):
            self._cfg(resolution=16)

    def test_explicit_model_id_wins(self):
        assert self._cfg(model_id="custom").effective_model_id == "custom"


class TestRunExtraction:
    def _extract(self, data, out, **kw):
        base = dict(
            data_root=str(data),
            backbone="resnet-18",
            out_dir=str(out),
            resolution=32,
            weights="random",
            batch_size=4,
        )
        base.update(kw)
        torch.manual_seed(0)  # fixed random weights so reruns are comparable
        return run_extraction(ExtractionConfig(**base))

    def test_resnet_has_five_levels(self, tmp_path):
        data = make_image_folder(tmp_path / "d")
        summary = self._extract(data, tmp_path / "o")
        assert summary["levels"] == {
            "level_00": 64,
            "level_01": 64,
            "level_02": 128,
            "level_03": 256,
            "level_04": 512,
        }
        assert summary["rows"] == 12
        for name, dim in summary["levels"].items():
            m = read_adfv(tmp_path / "o" / f"{name}.adfv")
            assert m.shape == (12, dim)
            assert np.isfinite(m).all()

    def test_augmentation_multiplies_train_rows_only(self, tmp_path):
        data = make_image_folder(
            tmp_path / "d", {"train/good": 4, "test/good": 1, "test/dent": 1}
        )
        summary = self._extract(
            data, tmp_path / "o", augment="rot90", epochs=3, levels=("level_00",)
        )
        assert summary["rows"] == 4 * 3 + 2
        lines = (tmp_path / "o" / "labels.csv").read_text().splitlines()
        assert len(lines) == 1 + 14
        train_rows = [l for l in lines[1:] if l.endswith("train/good")]
        assert len(train_rows) == 12
        assert any("#r2," in l for l in train_rows)
        assert all("#r0," in l for l in lines[1:] if "test/" in l)

    def test_replica_rows_differ_from_identity(self, tmp_path):
        data = make_image_folder(tmp_path / "d", {"train/good": 3, "test/good": 1})
        self._extract(data, tmp_path / "o", augment="flip+rot90", epochs=2,
                      levels=("level_00",))
        m = read_adfv(tmp_path / "o" / "level_00.adfv")
        lines = (tmp_path / "o" / "labels.csv").read_text().splitlines()[1:]
        rows = {line.split(",")[0]: m[i] for i, line in enumerate(lines)}
        base = rows["train/good/000.png#r0"]
        replica = rows["train/good/000.png#r1"]
        assert not np.allclose(base, replica)

    def test_deterministic_outputs(self, tmp_path):
        data = make_image_folder(tmp_path / "d")
        blobs = []
        for tag in ("o1", "o2"):
            out = tmp_path / tag
            self._extract(data, out, levels=("level_00", "level_01"))
            blobs.append({p.name: p.read_bytes() for p in out.iterdir()})
        assert blobs[0].keys() == blobs[1].keys()
        for name in blobs[0]:
            assert blobs[0][name] == blobs[1][name], name

    def test_unreadable_image_skipped_with_sidecar(self, tmp_path, capsys):
        data = make_image_folder(tmp_path / "d", {"train/good": 3, "test/good": 2})
        (data / "train/good/zzz_broken.png").write_bytes(b"not an image at all")
        summary = self._extract(data, tmp_path / "o", levels=("level_00",))
        assert summary["skipped"] == 1
        assert summary["rows"] == 5
        sidecar = (tmp_path / "o" / "skipped.txt").read_text()
        assert sidecar.startswith("train/good/zzz_broken.png\t")
        assert "zzz_broken" in capsys.readouterr().err
        assert read_adfv(tmp_path / "o" / "level_00.adfv").shape[0] == 5

    def test_all_images_unreadable_is_an_error(self, tmp_path):
        data = tmp_path / "d" / "train" / "good"
        data.mkdir(parents=True)
        (data / "bad.png").write_bytes(b"junk")
        with pytest.raises(ExtractError, match="nothing to extract"):
            self._extract(tmp_path / "d", tmp_path / "o")

    def test_unknown_level_rejected(self, tmp_path):
        data = make_image_folder(tmp_path / "d", {"train/good": 1})
        with pytest.raises(ExtractError, match="no level"):
            self._extract(data, tmp_path / "o", levels=("level_99",))

    def test_level_subset_manifest(self, tmp_path):
        data = make_image_folder(tmp_path / "d", {"train/good": 2})
        summary = self._extract(data, tmp_path / "o", levels=("level_01",))
        assert list(summary["levels"]) == ["level_01"]
        files = sorted(p.name for p in (tmp_path / "o").iterdir())
        assert files == ["labels.csv", "level_01.adfv", "manifest.json"]
