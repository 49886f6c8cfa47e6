"""Model directory layout: persistence and loading of fitted scorers.

A model directory holds a top-level ``meta.json`` (model_id, metric, level
names, fit options) plus one subdirectory per level::

    <model_dir>/meta.json
    <model_dir>/<level_name>/meta.json     level_name, dim, shrinkage_rho,
                                           n_fit, compression, working_point
    <model_dir>/<level_name>/mean.adfv     1 x d model mean
    <model_dir>/<level_name>/chol.adfv     d x d lower-triangular (mahalanobis)
    <model_dir>/<level_name>/std.adfv      1 x d (sed)
    <model_dir>/<level_name>/basis.adfv    D x d (when a projection is present)
    <model_dir>/<level_name>/eigvals.adfv  1 x d (when a projection is present)

ADFV payloads are binary32, so a loaded model is the binary32 rounding of
the fitted one; the loaded covariance is defined as L L^T of the stored
factor, which keeps the factorization exact by construction. All JSON is
written sorted with a trailing newline, so refitting identical inputs
reproduces byte-identical files.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import DataError
from .featurestore import atomic_write_text, read_matrix, write_matrix
from .gaussian import DiagonalModel, GaussianModel
from .scoring import LevelScorer
from .spectral import Projection
from .specfun import WorkingPoint, chi2_inverse_cdf

MODEL_FORMAT_VERSION = 1

_LEVEL_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.-]*$")


def _write_json(path: Path, doc: dict) -> None:
    atomic_write_text(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _read_json(path: Path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc


def _wp_to_doc(wp: WorkingPoint) -> dict:
    return {"dim": wp.dim, "target_fpr": wp.target_fpr, "threshold": wp.threshold}


def _wp_from_doc(doc: dict) -> WorkingPoint:
    try:
        return WorkingPoint(
            dim=int(doc["dim"]),
            target_fpr=float(doc["target_fpr"]),
            threshold=float(doc["threshold"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed working_point entry {doc!r}") from exc


def save_model_dir(path, scorers, model_id: str, options: dict | None = None) -> None:
    """Persist fitted scorers; all scorers must share one metric."""
    if not scorers:
        raise DataError("no scorers to save")
    metrics = {s.metric for s in scorers}
    if len(metrics) != 1:
        raise DataError(f"scorers mix metrics {sorted(metrics)}")
    names = [s.level_name for s in scorers]
    if len(set(names)) != len(names):
        raise DataError("duplicate level names among scorers")
    for name in names:
        if not _LEVEL_NAME_RE.match(name):
            raise DataError(f"level name {name!r} is not filesystem-safe")
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    top = {
        "format_version": MODEL_FORMAT_VERSION,
        "model_id": model_id,
        "metric": next(iter(metrics)),
        "levels": sorted(names),
    }
    if options:
        top["options"] = options
    _write_json(root / "meta.json", top)
    for scorer in scorers:
        _save_level(root / scorer.level_name, scorer)


def _save_level(level_dir: Path, scorer: LevelScorer) -> None:
    level_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "level_name": scorer.level_name,
        "metric": scorer.metric,
        "shrinkage_rho": None,
        "n_fit": None,
        "sed_eps": scorer.sed_eps,
        "compression": None,
        "working_point": None,
    }
    model = scorer.model
    if isinstance(model, GaussianModel):
        meta["dim"] = model.dim
        meta["shrinkage_rho"] = model.shrinkage
        meta["n_fit"] = model.n_fit
        write_matrix(level_dir / "mean.adfv", model.mean.reshape(1, -1))
        write_matrix(level_dir / "chol.adfv", model.chol_factor)
    elif isinstance(model, DiagonalModel):
        meta["dim"] = model.dim
        write_matrix(level_dir / "mean.adfv", model.mean.reshape(1, -1))
        write_matrix(level_dir / "std.adfv", model.std.reshape(1, -1))
    else:
        mean = np.asarray(model, dtype=np.float64)
        meta["dim"] = int(mean.shape[0])
        write_matrix(level_dir / "mean.adfv", mean.reshape(1, -1))
    proj = scorer.projection
    meta["input_dim"] = scorer.in_dim
    if proj is not None:
        meta["compression"] = {
            "mode": proj.mode,
            "q": proj.q,
            "total_variance": proj.total_variance,
            "center": [float(v) for v in proj.center],
        }
        write_matrix(level_dir / "basis.adfv", proj.basis)
        write_matrix(level_dir / "eigvals.adfv", proj.eigenvalues.reshape(1, -1))
    _write_json(level_dir / "meta.json", meta)


def _load_vector(path: Path, what: str) -> np.ndarray:
    m = read_matrix(path)
    if m.shape[0] != 1:
        raise DataError(f"{path}: expected a 1 x d {what}, got shape {m.shape}")
    return m[0]


def _load_level(level_dir: Path) -> LevelScorer:
    meta = _read_json(level_dir / "meta.json")
    try:
        level_name = meta["level_name"]
        metric = meta["metric"]
        dim = int(meta["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{level_dir}/meta.json: missing or malformed fields") from exc
    if level_name != level_dir.name:
        raise DataError(
            f"{level_dir}: directory name disagrees with level_name '{level_name}'"
        )
    mean = _load_vector(level_dir / "mean.adfv", "mean")
    if mean.shape[0] != dim:
        raise DataError(f"{level_dir}: mean length {mean.shape[0]} but meta dim {dim}")
    projection = None
    if meta.get("compression") is not None:
        comp = meta["compression"]
        try:
            mode = comp["mode"]
            q = float(comp["q"])
            total = float(comp["total_variance"])
            center = np.asarray(comp["center"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{level_dir}: malformed compression entry") from exc
        basis = read_matrix(level_dir / "basis.adfv")
        eigvals = _load_vector(level_dir / "eigvals.adfv", "eigenvalue row")
        if basis.shape[1] != dim or eigvals.shape[0] != dim:
            raise DataError(
                f"{level_dir}: projection shapes {basis.shape}/{eigvals.shape} "
                f"disagree with meta dim {dim}"
            )
        if center.shape[0] != basis.shape[0]:
            raise DataError(f"{level_dir}: center length disagrees with basis rows")
        # binary32 storage rounds the basis; orthonormality only holds to
        # storage precision on reload
        projection = Projection(
            basis=basis,
            eigenvalues=eigvals,
            mode=mode,
            q=q,
            total_variance=total,
            center=center,
            gram_tol=1e-5,
        )
    if metric == "mahalanobis":
        chol = read_matrix(level_dir / "chol.adfv")
        if chol.shape != (dim, dim):
            raise DataError(f"{level_dir}: chol shape {chol.shape} but meta dim {dim}")
        if np.abs(np.triu(chol, 1)).max() > 0:
            raise DataError(f"{level_dir}: chol.adfv is not lower-triangular")
        cov = chol @ chol.T
        cov = 0.5 * (cov + cov.T)
        rho = meta.get("shrinkage_rho")
        n_fit = meta.get("n_fit")
        if rho is None or n_fit is None:
            raise DataError(f"{level_dir}: gaussian model meta needs shrinkage_rho and n_fit")
        model = GaussianModel(
            mean=mean,
            covariance=cov,
            chol_factor=chol,
            dim=dim,
            shrinkage=float(rho),
            n_fit=int(n_fit),
        )
    elif metric == "sed":
        std = _load_vector(level_dir / "std.adfv", "std")
        if std.shape[0] != dim:
            raise DataError(f"{level_dir}: std length {std.shape[0]} but meta dim {dim}")
        model = DiagonalModel(mean=mean, std=std)
    elif metric == "l2":
        model = mean
    else:
        raise DataError(f"{level_dir}: unknown metric '{metric}'")
    sed_eps = meta.get("sed_eps")
    return LevelScorer(
        level_name=level_name,
        metric=metric,
        model=model,
        projection=projection,
        sed_eps=float(sed_eps) if sed_eps is not None else None,
    )


def load_model_dir(path) -> tuple[list[LevelScorer], dict]:
    """Load every level of a model directory; returns (scorers, top meta)."""
    root = Path(path)
    top = _read_json(root / "meta.json")
    for key in ("format_version", "model_id", "metric", "levels"):
        if key not in top:
            raise DataError(f"{root}/meta.json: missing field '{key}'")
    if top["format_version"] != MODEL_FORMAT_VERSION:
        raise DataError(f"{root}: unsupported model format_version {top['format_version']}")
    scorers = []
    for name in sorted(top["levels"]):
        level_dir = root / name
        if not level_dir.is_dir():
            raise DataError(f"{root}: level '{name}' listed in meta.json but missing on disk")
        scorer = _load_level(level_dir)
        if scorer.metric != top["metric"]:
            raise DataError(
                f"{root}: level '{name}' metric '{scorer.metric}' disagrees with "
                f"top-level '{top['metric']}'"
            )
        scorers.append(scorer)
    return scorers, top


def set_working_point(path, level_name: str, wp: WorkingPoint) -> None:
    """Embed a working point into one level's meta.json."""
    level_dir = Path(path) / level_name
    meta_path = level_dir / "meta.json"
    meta = _read_json(meta_path)
    if meta.get("level_name") != level_name:
        raise DataError(f"{meta_path}: not a level meta file")
    if int(meta["dim"]) != wp.dim:
        raise DataError(
            f"working point dim {wp.dim} disagrees with model dim {meta['dim']}"
        )
    meta["working_point"] = _wp_to_doc(wp)
    _write_json(meta_path, meta)


def get_working_point(path, level_name: str) -> WorkingPoint | None:
    meta = _read_json(Path(path) / level_name / "meta.json")
    doc = meta.get("working_point")
    if doc is None:
        return None
    wp = _wp_from_doc(doc)
    expect = math.sqrt(chi2_inverse_cdf(wp.dim, 1.0 - wp.target_fpr))
    if abs(expect - wp.threshold) > 1e-6 * max(1.0, expect):
        raise DataError(
            f"stored working point threshold {wp.threshold} is inconsistent with "
            f"dim={wp.dim}, fpr={wp.target_fpr}"
        )
    return wp
