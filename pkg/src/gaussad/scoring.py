"""Per-level scorers, sum-mode aggregation, and thresholded decisions.

A LevelScorer pairs one fitted model with its metric and an optional
projection; score_sum adds the per-level scores with equal weights. To keep
output bit-reproducible regardless of construction order, sums always run
in ascending level-name order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, UsageError
from .featurestore import atomic_write_text
from .gaussian import (
    DiagonalModel,
    GaussianModel,
    fit_diagonal,
    fit_gaussian,
    l2,
    l2_many,
    mahalanobis,
    mahalanobis_many,
    sed,
    sed_many,
)
from .spectral import Projection, fit_projection, project
from .specfun import WorkingPoint

METRICS = ("mahalanobis", "sed", "l2")

DECISION_NORMAL = "normal"
DECISION_ANOMALOUS = "anomalous"


@dataclass(frozen=True)
class LevelScorer:
    """One level's metric, model, and optional dimensionality reduction."""

    level_name: str
    metric: str
    model: object
    projection: Projection | None = None
    sed_eps: float | None = None

    def __post_init__(self):
        if self.metric not in METRICS:
            raise UsageError(f"unknown metric '{self.metric}' (expected one of {METRICS})")
        if self.metric == "mahalanobis" and not isinstance(self.model, GaussianModel):
            raise UsageError("mahalanobis metric requires a GaussianModel")
        if self.metric == "sed" and not isinstance(self.model, DiagonalModel):
            raise UsageError("sed metric requires a DiagonalModel")
        if self.metric == "l2" and not isinstance(
            self.model, (GaussianModel, DiagonalModel, np.ndarray)
        ):
            raise UsageError("l2 metric requires a model with a mean (or a bare mean vector)")
        if self.sed_eps is not None and self.metric != "sed":
            raise UsageError("sed_eps only applies to the sed metric")
        if self.projection is not None and self.projection.out_dim != self._model_dim():
            raise DataError(
                f"level '{self.level_name}': projection output dim "
                f"{self.projection.out_dim} disagrees with model dim {self._model_dim()}"
            )

    def _model_dim(self) -> int:
        if isinstance(self.model, np.ndarray):
            return self.model.shape[0]
        return self.model.dim

    @property
    def in_dim(self) -> int:
        """Feature dimensionality this scorer expects at its input."""
        if self.projection is not None:
            return self.projection.in_dim
        return self._model_dim()

    def _mean(self) -> np.ndarray:
        return self.model if isinstance(self.model, np.ndarray) else self.model.mean


@dataclass(frozen=True)
class ScoreRecord:
    """All per-level scores of one sample plus their unweighted sum."""

    sample_id: str
    level_scores: dict
    sum_score: float
    decision: str | None = None


def fit_scorer(
    level_name: str,
    X,
    metric: str,
    shrinkage="auto",
    compression: tuple | None = None,
    sed_eps: float | None = None,
) -> LevelScorer:
    """Fit one level's model (plus optional projection) from training rows.

    `compression` is None or a ("pca"|"npca", q) pair. Component selection
    runs on the raw sample covariance; the model is then fitted in the
    reduced space (with the requested shrinkage for mahalanobis).
    """
    if metric not in METRICS:
        raise UsageError(f"unknown metric '{metric}' (expected one of {METRICS})")
    X = np.asarray(X, dtype=np.float64)
    projection = None
    if compression is not None:
        kind, q = compression
        projection = fit_projection(X, kind, q)
        X = project(projection, X)
    if metric == "mahalanobis":
        model = fit_gaussian(X, shrinkage=shrinkage)
    elif metric == "sed":
        model = fit_diagonal(X)
    else:
        model = np.asarray(X, dtype=np.float64).mean(axis=0)
    return LevelScorer(
        level_name=level_name,
        metric=metric,
        model=model,
        projection=projection,
        sed_eps=sed_eps if metric == "sed" else None,
    )


def score_level(scorer: LevelScorer, x) -> float:
    """Apply the scorer's projection (if any), then its metric."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (scorer.in_dim,):
        raise DataError(
            f"level '{scorer.level_name}': expected a vector of length "
            f"{scorer.in_dim}, got shape {x.shape}"
        )
    if scorer.projection is not None:
        x = project(scorer.projection, x)
    if scorer.metric == "mahalanobis":
        return mahalanobis(scorer.model, x)
    if scorer.metric == "sed":
        return sed(scorer.model, x, eps=scorer.sed_eps)
    return l2(scorer._mean(), x)


def score_level_many(scorer: LevelScorer, X) -> np.ndarray:
    """score_level over the rows of X, vectorized."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != scorer.in_dim:
        raise DataError(
            f"level '{scorer.level_name}': expected an n x {scorer.in_dim} matrix, "
            f"got shape {X.shape}"
        )
    if scorer.projection is not None:
        X = project(scorer.projection, X)
    if scorer.metric == "mahalanobis":
        return mahalanobis_many(scorer.model, X)
    if scorer.metric == "sed":
        return sed_many(scorer.model, X, eps=scorer.sed_eps)
    return l2_many(scorer._mean(), X)


def _ordered(scorers) -> list[LevelScorer]:
    names = [s.level_name for s in scorers]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise DataError(f"duplicate level scorer(s): {dup}")
    return sorted(scorers, key=lambda s: s.level_name)


def score_sum(scorers, sample: dict, sample_id: str = "") -> ScoreRecord:
    """Score one sample (map level_name -> vector) against every scorer.

    Summation runs in ascending level-name order so the float result does
    not depend on scorer construction order.
    """
    ordered = _ordered(scorers)
    missing = [s.level_name for s in ordered if s.level_name not in sample]
    if missing:
        raise DataError(f"sample is missing level vector(s): {missing}")
    level_scores = {}
    total = 0.0
    for s in ordered:
        val = score_level(s, sample[s.level_name])
        level_scores[s.level_name] = val
        total += val
    return ScoreRecord(sample_id=sample_id, level_scores=level_scores, sum_score=total)


def score_sum_many(scorers, level_matrices: dict, sample_ids) -> list[ScoreRecord]:
    """Vectorized score_sum over a dataset (map level_name -> n x D matrix)."""
    ordered = _ordered(scorers)
    missing = [s.level_name for s in ordered if s.level_name not in level_matrices]
    if missing:
        raise DataError(f"dataset is missing level matrix(es): {missing}")
    sample_ids = list(sample_ids)
    n = len(sample_ids)
    per_level = {}
    for s in ordered:
        M = np.asarray(level_matrices[s.level_name])
        if M.shape[0] != n:
            raise DataError(
                f"level '{s.level_name}' has {M.shape[0]} rows for {n} sample ids"
            )
        per_level[s.level_name] = score_level_many(s, M)
    records = []
    for i, sid in enumerate(sample_ids):
        scores = {name: float(per_level[name][i]) for name in per_level}
        total = 0.0
        for name in sorted(scores):
            total += scores[name]
        records.append(ScoreRecord(sample_id=sid, level_scores=scores, sum_score=total))
    return records


def classify(score: float, wp: WorkingPoint) -> str:
    """Anomalous iff score exceeds the threshold; a tie counts as normal."""
    if score < 0:
        raise DataError(f"scores are nonnegative by construction, got {score}")
    return DECISION_ANOMALOUS if score > wp.threshold else DECISION_NORMAL


def write_scores_csv(records, path) -> None:
    """Scores CSV: sample_id, one column per level (ascending name), sum.

    Values are printed with 9 significant digits.
    """
    if not records:
        raise DataError("no score records to write")
    names = sorted(records[0].level_scores)
    for r in records:
        if sorted(r.level_scores) != names:
            raise DataError(f"sample '{r.sample_id}' has inconsistent level names")
    lines = [",".join(["sample_id", *names, "sum"])]
    for r in records:
        cells = [r.sample_id]
        cells += ["%.9g" % r.level_scores[name] for name in names]
        cells.append("%.9g" % r.sum_score)
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")
