"""AUROC, operating-point rates, k-fold splitting, and report assembly.

AUROC uses the tie-corrected rank formulation: with R the sum of average
ranks of the anomalous scores in the pooled ranking,
AUROC = (R - n_pos(n_pos+1)/2) / (n_pos * n_neg), which equals
P(score_anom > score_norm) + P(score_anom = score_norm)/2 over all
cross-class pairs.

The k-fold protocol fits each fold's model on the other k-1 folds of the
all-normal training pool, scores the full test pool, and averages AUROC
across folds (mean +/- standard error of the mean); fold scores are never
pooled into one ranking. Folds may run on a thread pool (GAUSS_AD_THREADS);
results are merged in fold order so the report is identical either way.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, UsageError
from .featurestore import LABEL_ANOMALOUS, LABEL_NORMAL, load_dataset
from .rng import Xoshiro256StarStar
from .scoring import fit_scorer, score_level_many
from .specfun import threshold_for_fpr


def _tied_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and sx[j + 1] == sx[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _check_scores_labels(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise DataError(
            f"scores and labels must be equal-length vectors, got {scores.shape} "
            f"and {labels.shape}"
        )
    if not np.isfinite(scores).all():
        raise DataError("non-finite scores")
    if not np.isin(labels, (LABEL_NORMAL, LABEL_ANOMALOUS)).all():
        raise DataError("labels must be 0 or 1")
    return scores, labels


def auroc(scores, labels) -> float:
    """Area under the ROC curve of `scores` against binary `labels`."""
    scores, labels = _check_scores_labels(scores, labels)
    n_pos = int((labels == LABEL_ANOMALOUS).sum())
    n_neg = int((labels == LABEL_NORMAL).sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("degenerate labels: need at least one sample of each class")
    ranks = _tied_ranks(scores)
    r_pos = float(ranks[labels == LABEL_ANOMALOUS].sum())
    return (r_pos - 0.5 * n_pos * (n_pos + 1)) / (n_pos * n_neg)


def fpr_tpr_at(scores, labels, t: float) -> tuple[float, float]:
    """Empirical (FPR, TPR) at threshold t; score > t counts as a positive call."""
    scores, labels = _check_scores_labels(scores, labels)
    pos = labels == LABEL_ANOMALOUS
    neg = labels == LABEL_NORMAL
    if not pos.any() or not neg.any():
        raise DataError("degenerate labels: need at least one sample of each class")
    fpr = float((scores[neg] > t).sum()) / int(neg.sum())
    tpr = float((scores[pos] > t).sum()) / int(pos.sum())
    return fpr, tpr


def kfold_split(sample_ids, k: int, seed: int) -> list[list]:
    """Shuffle ids with the seeded generator and deal them into k folds.

    Fold sizes differ by at most one; the first n mod k folds take the
    extra sample each.
    """
    ids = list(sample_ids)
    n = len(ids)
    if k < 2:
        raise UsageError(f"k-fold needs k >= 2, got {k}")
    if k > n:
        raise UsageError(f"cannot split {n} samples into {k} folds")
    Xoshiro256StarStar(seed).shuffle(ids)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(ids[start : start + size])
        start += size
    return folds


@dataclass(frozen=True)
class FoldResult:
    fold_index: int
    auroc: float
    target_fpr: float | None = None
    achieved_fpr: float | None = None
    achieved_tpr: float | None = None


@dataclass(frozen=True)
class EvalReport:
    folds: tuple[FoldResult, ...]
    mean_auroc: float
    sem_auroc: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "folds", tuple(self.folds))
        if not self.folds:
            raise DataError("report has no folds")


def aggregate(folds) -> tuple[float, float]:
    """Mean and standard error of the mean of the per-fold AUROCs."""
    vals = np.array([f.auroc for f in folds], dtype=np.float64)
    mean = float(vals.mean())
    sem = float(vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else 0.0
    return mean, sem


@dataclass(frozen=True)
class EvalConfig:
    metric: str = "mahalanobis"
    shrinkage: object = "auto"
    compression: tuple | None = None
    levels: tuple | None = None
    k: int = 5
    seed: int = 42
    fpr: float | None = None
    sed_eps: float | None = None


def split_pools(labels, require_test: bool = True):
    """Row indices of the training pool (must be all-normal) and test pool."""
    train_mask = labels.train_mask
    bad = [
        labels.sample_ids[i]
        for i in np.flatnonzero(train_mask & (labels.labels == LABEL_ANOMALOUS))
    ]
    if bad:
        raise DataError(f"anomalous sample(s) in train pool: {bad[:5]}")
    train_idx = np.flatnonzero(train_mask)
    test_idx = np.flatnonzero(~train_mask)
    if train_idx.size == 0:
        raise DataError("manifest has no train pool (no category starting with 'train')")
    if require_test and test_idx.size == 0:
        raise DataError("manifest has no test pool")
    return train_idx, test_idx


def select_levels(feature_sets, wanted):
    """Subset of feature sets in ascending level-name order."""
    by_name = {fs.level_name: fs for fs in feature_sets}
    if wanted is None:
        return sorted(feature_sets, key=lambda fs: fs.level_name)
    missing = [w for w in wanted if w not in by_name]
    if missing:
        raise UsageError(f"unknown level(s) {missing}; manifest has {sorted(by_name)}")
    return [by_name[w] for w in sorted(set(wanted))]


def _workers() -> int:
    raw = os.environ.get("GAUSS_AD_THREADS", "")
    if not raw:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"GAUSS_AD_THREADS must be an integer, got {raw!r}") from None


def run_kfold(manifest_path, config: EvalConfig) -> EvalReport:
    """k-fold protocol over a manifest's train pool, evaluated on its test pool."""
    _, feature_sets, labels = load_dataset(manifest_path)
    selected = select_levels(feature_sets, config.levels)
    if config.fpr is not None:
        if len(selected) != 1:
            raise UsageError("working point undefined for sum mode; select exactly one level")
        if config.metric != "mahalanobis":
            raise UsageError("working points are calibrated for the mahalanobis metric only")
    train_idx, test_idx = split_pools(labels)
    test_labels = labels.labels[test_idx]

    train_ids = [labels.sample_ids[i] for i in train_idx]
    pos_of = {sid: i for sid, i in zip(train_ids, train_idx)}
    folds = kfold_split(train_ids, config.k, config.seed)

    def eval_fold(fold_index: int) -> FoldResult:
        held_out = set(folds[fold_index])
        fit_rows = np.array([pos_of[sid] for sid in train_ids if sid not in held_out])
        total = None
        dim_for_wp = None
        for fs in selected:
            scorer = fit_scorer(
                fs.level_name,
                fs.data[fit_rows],
                config.metric,
                shrinkage=config.shrinkage,
                compression=config.compression,
                sed_eps=config.sed_eps,
            )
            level_scores = score_level_many(scorer, fs.data[test_idx])
            total = level_scores if total is None else total + level_scores
            if config.fpr is not None:
                dim_for_wp = (
                    scorer.model.dim
                    if hasattr(scorer.model, "dim")
                    else scorer.model.shape[0]
                )
        value = auroc(total, test_labels)
        if config.fpr is None:
            return FoldResult(fold_index=fold_index, auroc=value)
        wp = threshold_for_fpr(dim_for_wp, config.fpr)
        afpr, atpr = fpr_tpr_at(total, test_labels, wp.threshold)
        return FoldResult(
            fold_index=fold_index,
            auroc=value,
            target_fpr=config.fpr,
            achieved_fpr=afpr,
            achieved_tpr=atpr,
        )

    workers = _workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(eval_fold, range(config.k)))
    else:
        results = [eval_fold(i) for i in range(config.k)]
    mean, sem = aggregate(results)
    metadata = {
        "metric": config.metric,
        "shrinkage": config.shrinkage if isinstance(config.shrinkage, str) else float(config.shrinkage),
        "compression": None
        if config.compression is None
        else {"mode": config.compression[0], "q": config.compression[1]},
        "levels": [fs.level_name for fs in selected],
        "k": config.k,
        "seed": config.seed,
        "n_train": int(train_idx.size),
        "n_test": int(test_idx.size),
    }
    if config.fpr is not None:
        metadata["target_fpr"] = config.fpr
    return EvalReport(folds=tuple(results), mean_auroc=mean, sem_auroc=sem, metadata=metadata)


def report_to_dict(report: EvalReport) -> dict:
    folds = []
    for f in report.folds:
        row = {"fold": f.fold_index, "auroc": f.auroc}
        if f.target_fpr is not None:
            row["target_fpr"] = f.target_fpr
            row["achieved_fpr"] = f.achieved_fpr
            row["achieved_tpr"] = f.achieved_tpr
        folds.append(row)
    return {
        "metadata": report.metadata,
        "folds": folds,
        "mean_auroc": report.mean_auroc,
        "sem_auroc": report.sem_auroc,
    }


def report_to_text(report: EvalReport) -> str:
    """Aligned-column rendering of the report for human eyes."""
    with_wp = any(f.target_fpr is not None for f in report.folds)
    header = ["fold", "auroc"]
    if with_wp:
        header += ["target_fpr", "achieved_fpr", "achieved_tpr"]
    rows = []
    for f in report.folds:
        row = [str(f.fold_index), "%.6f" % f.auroc]
        if with_wp:
            row += ["%.6g" % f.target_fpr, "%.6g" % f.achieved_fpr, "%.6g" % f.achieved_tpr]
        rows.append(row)
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    for row in rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(row, widths)))
    lines.append("")
    lines.append("mean auroc  %.6f" % report.mean_auroc)
    lines.append("sem auroc   %.6f" % report.sem_auroc)
    meta = report.metadata
    if meta:
        parts = [f"{k}={meta[k]}" for k in sorted(meta)]
        lines.append("config      " + " ".join(parts))
    return "\n".join(lines) + "\n"
