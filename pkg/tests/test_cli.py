"""Command-line behavior: flags, exit codes, artifacts, determinism."""

import json

import numpy as np
import pytest

from gaussad.cli import main, parse_compression, parse_fpr, parse_levels, parse_shrinkage
from gaussad.errors import UsageError

from conftest import build_dataset


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestFlagParsing:
    def test_fpr_fraction_and_percent(self):
        assert parse_fpr("0.003") == 0.003
        assert parse_fpr("0.3%") == pytest.approx(0.003)
        assert parse_fpr(" 5% ") == pytest.approx(0.05)

    def test_fpr_rejections(self):
        for bad in ("0", "1", "1.5", "-0.1", "abc", "%", "110%"):
            with pytest.raises(UsageError):
                parse_fpr(bad)

    def test_compression(self):
        assert parse_compression("none") is None
        assert parse_compression("pca:0.95") == ("pca", 0.95)
        assert parse_compression("NPCA:0.4") == ("npca", 0.4)
        for bad in ("pca", "lda:0.5", "pca:1.0", "pca:zero", "pca:0"):
            with pytest.raises(UsageError):
                parse_compression(bad)

    def test_shrinkage(self):
        assert parse_shrinkage("auto") == "auto"
        assert parse_shrinkage("none") == "none"
        assert parse_shrinkage("0.25") == 0.25
        for bad in ("2", "-0.1", "always"):
            with pytest.raises(UsageError):
                parse_shrinkage(bad)

    def test_levels(self):
        assert parse_levels("a,b") == ("a", "b")
        assert parse_levels(" a , b ,") == ("a", "b")
        with pytest.raises(UsageError):
            parse_levels(" , ")


class TestExitCodes:
    def test_no_subcommand_is_usage_error(self, capsys):
        code, _, err = run(capsys)
        assert code == 1
        assert err.startswith("error: ")

    def test_unknown_flag_is_usage_error(self, capsys):
        code, _, err = run(capsys, "fit", "--manifest", "x.json", "--out", "m", "--bogus")
        assert code == 1
        assert err.startswith("error: ")

    def test_missing_manifest_is_data_error(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "fit", "--manifest", str(tmp_path / "nope.json"), "--out",
            str(tmp_path / "m"),
        )
        assert code == 2
        assert err.startswith("error: ")

    def test_anomalous_train_sample_is_data_error(self, capsys, tmp_path):
        manifest = build_dataset(tmp_path, {"lvl": 4}, n_train=6)
        labels_path = tmp_path / "labels.csv"
        rows = labels_path.read_text().splitlines()
        rows[1] = rows[1].replace(",0,", ",1,")
        labels_path.write_text("\n".join(rows) + "\n")
        code, _, err = run(
            capsys, "fit", "--manifest", str(manifest), "--out", str(tmp_path / "m")
        )
        assert code == 2
        assert "train_good_0000" in err

    def test_singular_fit_is_numeric_error(self, capsys, tmp_path):
        # 4 training rows at D=8 with shrinkage disabled cannot factorize
        manifest = build_dataset(
            tmp_path, {"lvl": 8}, n_train=4, n_test_normal=2, n_test_anomalous=2
        )
        code, _, err = run(
            capsys, "fit", "--manifest", str(manifest), "--out", str(tmp_path / "m"),
            "--shrinkage", "none",
        )
        assert code == 3
        assert "singular covariance" in err

    def test_error_is_single_line(self, capsys, tmp_path):
        code, _, err = run(
            capsys, "score", "--manifest", str(tmp_path / "no.json"),
            "--model", str(tmp_path / "m"), "--out", str(tmp_path / "s.csv"),
        )
        assert code == 2
        assert err.count("\n") == 1 and err.endswith("\n")


@pytest.fixture
def fitted(tmp_path):
    """Dataset manifest plus a model directory fitted from its train pool."""
    manifest = build_dataset(tmp_path, {"lvl_a": 6, "lvl_b": 4})
    model = tmp_path / "model"
    assert main(["fit", "--manifest", str(manifest), "--out", str(model)]) == 0
    return manifest, model


class TestFitAndScore:
    def test_fit_twice_is_byte_identical(self, tmp_path):
        manifest = build_dataset(tmp_path, {"lvl": 5})
        m1, m2 = tmp_path / "m1", tmp_path / "m2"
        for out in (m1, m2):
            args = ["fit", "--manifest", str(manifest), "--out", str(out),
                    "--compression", "pca:0.99"]
            assert main(args) == 0
        files = sorted(p.relative_to(m1) for p in m1.rglob("*") if p.is_file())
        assert files
        for rel in files:
            assert (m1 / rel).read_bytes() == (m2 / rel).read_bytes(), rel

    def test_score_writes_expected_csv(self, fitted, capsys, tmp_path):
        manifest, model = fitted
        out = tmp_path / "scores.csv"
        code, _, _ = run(
            capsys, "score", "--manifest", str(manifest), "--model", str(model),
            "--out", str(out),
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "sample_id,lvl_a,lvl_b,sum"
        assert len(lines) == 1 + 50  # test pool only
        first = lines[1].split(",")
        assert first[0].startswith("test_")
        assert float(first[3]) == pytest.approx(float(first[1]) + float(first[2]), rel=1e-6)

    def test_score_pools(self, fitted, capsys, tmp_path):
        manifest, model = fitted
        for pool, expected in (("train", 80), ("test", 50), ("all", 130)):
            out = tmp_path / f"{pool}.csv"
            code, _, _ = run(
                capsys, "score", "--manifest", str(manifest), "--model", str(model),
                "--out", str(out), "--pool", pool,
            )
            assert code == 0
            assert len(out.read_text().splitlines()) == 1 + expected

    def test_score_is_deterministic(self, fitted, capsys, tmp_path):
        manifest, model = fitted
        outs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            run(capsys, "score", "--manifest", str(manifest), "--model", str(model),
                "--out", str(out))
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_model_id_cross_check(self, fitted, capsys, tmp_path):
        manifest, model = fitted
        other_root = tmp_path / "other"
        other_root.mkdir()
        other = build_dataset(other_root, {"lvl_a": 6, "lvl_b": 4}, model_id="different-net")
        code, _, err = run(
            capsys, "score", "--manifest", str(other), "--model", str(model),
            "--out", str(tmp_path / "x.csv"),
        )
        assert code == 2
        assert "model_id" in err

    def test_levels_subset_fit(self, tmp_path, capsys):
        manifest = build_dataset(tmp_path, {"lvl_a": 6, "lvl_b": 4})
        model = tmp_path / "m"
        code, _, _ = run(
            capsys, "fit", "--manifest", str(manifest), "--out", str(model),
            "--levels", "lvl_b",
        )
        assert code == 0
        top = json.loads((model / "meta.json").read_text())
        assert top["levels"] == ["lvl_b"]
        out = tmp_path / "s.csv"
        run(capsys, "score", "--manifest", str(manifest), "--model", str(model),
            "--out", str(out))
        assert out.read_text().splitlines()[0] == "sample_id,lvl_b,sum"


class TestThreshold:
    def test_sum_mode_refused(self, fitted, capsys):
        _, model = fitted
        code, _, err = run(
            capsys, "threshold", "--model", str(model), "--level", "sum", "--fpr", "0.01"
        )
        assert code == 1
        assert err == "error: working point undefined for sum mode\n"

    def test_single_feature_percent_example(self, tmp_path, capsys):
        # at D=1 a 0.3% FPR working point sits at the three-sigma threshold
        manifest = build_dataset(tmp_path, {"one": 1})
        model = tmp_path / "m"
        main(["fit", "--manifest", str(manifest), "--out", str(model)])
        code, out, _ = run(
            capsys, "threshold", "--model", str(model), "--level", "one",
            "--fpr", "0.3%",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["dim"] == 1
        assert doc["target_fpr"] == pytest.approx(0.003)
        assert doc["threshold"] == pytest.approx(2.9677, rel=1e-3)

    def test_threshold_persisted_and_emitted(self, fitted, capsys, tmp_path):
        _, model = fitted
        out = tmp_path / "wp.json"
        code, stdout, _ = run(
            capsys, "threshold", "--model", str(model), "--level", "lvl_a",
            "--fpr", "0.05", "--out", str(out),
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc == json.loads(stdout)
        meta = json.loads((model / "lvl_a" / "meta.json").read_text())
        assert meta["working_point"]["threshold"] == pytest.approx(doc["threshold"])

    def test_unknown_level(self, fitted, capsys):
        _, model = fitted
        code, _, err = run(
            capsys, "threshold", "--model", str(model), "--level", "ghost", "--fpr", "0.05"
        )
        assert code == 1
        assert "ghost" in err


class TestEvaluate:
    def test_sum_auroc(self, fitted, capsys):
        manifest, model = fitted
        code, out, _ = run(
            capsys, "evaluate", "--manifest", str(manifest), "--model", str(model)
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["level"] == "sum"
        assert doc["auroc"] >= 0.99
        assert doc["n_test"] == 50
        assert doc["n_normal"] == 25 and doc["n_anomalous"] == 25

    def test_single_level_with_fpr(self, fitted, capsys):
        manifest, model = fitted
        code, out, _ = run(
            capsys, "evaluate", "--manifest", str(manifest), "--model", str(model),
            "--level", "lvl_a", "--fpr", "5%",
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["level"] == "lvl_a"
        assert doc["target_fpr"] == pytest.approx(0.05)
        assert 0.0 <= doc["achieved_fpr"] <= 1.0
        assert doc["achieved_tpr"] >= 0.9

    def test_fpr_with_sum_refused(self, fitted, capsys):
        manifest, model = fitted
        code, _, err = run(
            capsys, "evaluate", "--manifest", str(manifest), "--model", str(model),
            "--fpr", "5%",
        )
        assert code == 1
        assert "working point undefined for sum mode" in err

    def test_out_json(self, fitted, capsys, tmp_path):
        manifest, model = fitted
        out = tmp_path / "eval.json"
        code, stdout, _ = run(
            capsys, "evaluate", "--manifest", str(manifest), "--model", str(model),
            "--out-json", str(out),
        )
        assert code == 0
        assert json.loads(out.read_text()) == json.loads(stdout)


class TestKfold:
    def test_report_and_artifacts(self, tmp_path, capsys):
        manifest = build_dataset(tmp_path, {"lvl": 6})
        out_json = tmp_path / "report.json"
        out_txt = tmp_path / "report.txt"
        code, stdout, _ = run(
            capsys, "kfold", "--manifest", str(manifest), "--k", "4",
            "--out-json", str(out_json), "--out-txt", str(out_txt),
        )
        assert code == 0
        assert stdout == out_txt.read_text()
        doc = json.loads(out_json.read_text())
        assert len(doc["folds"]) == 4
        assert doc["mean_auroc"] >= 0.99
        assert doc["metadata"]["seed"] == 42

    def test_deterministic_across_runs_and_threads(self, tmp_path, capsys, monkeypatch):
        manifest = build_dataset(tmp_path, {"lvl": 6})
        texts = []
        for threads in (None, None, "3"):
            if threads is None:
                monkeypatch.delenv("GAUSS_AD_THREADS", raising=False)
            else:
                monkeypatch.setenv("GAUSS_AD_THREADS", threads)
            code, stdout, _ = run(
                capsys, "kfold", "--manifest", str(manifest), "--seed", "7",
                "--compression", "npca:0.6",
            )
            assert code == 0
            texts.append(stdout)
        assert texts[0] == texts[1] == texts[2]

    def test_fpr_requires_single_level(self, tmp_path, capsys):
        manifest = build_dataset(tmp_path, {"lvl_a": 4, "lvl_b": 4})
        code, _, err = run(
            capsys, "kfold", "--manifest", str(manifest), "--fpr", "0.05"
        )
        assert code == 1
        assert "working point undefined for sum mode" in err

    def test_bad_threads_value(self, tmp_path, capsys, monkeypatch):
        manifest = build_dataset(tmp_path, {"lvl": 4})
        monkeypatch.setenv("GAUSS_AD_THREADS", "many")
        code, _, err = run(capsys, "kfold", "--manifest", str(manifest))
        assert code == 1
        assert "GAUSS_AD_THREADS" in err


class TestEndToEndDeterminism:
    def test_full_pipeline_reruns_byte_identical(self, tmp_path, capsys):
        manifest = build_dataset(tmp_path, {"lvl_a": 6, "lvl_b": 4})
        artifacts = []
        for tag in ("r1", "r2"):
            model = tmp_path / tag / "model"
            scores = tmp_path / tag / "scores.csv"
            report = tmp_path / tag / "report.json"
            (tmp_path / tag).mkdir()
            assert main(["fit", "--manifest", str(manifest), "--out", str(model),
                         "--compression", "npca:0.5"]) == 0
            assert main(["threshold", "--model", str(model), "--level", "lvl_a",
                         "--fpr", "1%"]) == 0
            assert main(["score", "--manifest", str(manifest), "--model", str(model),
                         "--out", str(scores)]) == 0
            assert main(["kfold", "--manifest", str(manifest), "--k", "3",
                         "--out-json", str(report)]) == 0
            capsys.readouterr()
            blob = {p.relative_to(tmp_path / tag): p.read_bytes()
                    for p in (tmp_path / tag).rglob("*") if p.is_file()}
            artifacts.append(blob)
        assert artifacts[0].keys() == artifacts[1].keys()
        for rel in artifacts[0]:
            assert artifacts[0][rel] == artifacts[1][rel], rel
