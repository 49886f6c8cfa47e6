"""Command-line front end.

Subcommands: fit, score, threshold, evaluate, kfold. Exit codes distinguish
usage errors (1), data errors (2), and numeric errors (3); every failure
prints a single ``error: ...`` line on stderr. All output files are written
atomically and contain no timestamps, so reruns with identical inputs
produce byte-identical artifacts.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass

import numpy as np

from .errors import DataError, GaussAdError, UsageError
from .evaluation import (
    EvalConfig,
    auroc,
    fpr_tpr_at,
    report_to_dict,
    report_to_text,
    run_kfold,
    select_levels,
    split_pools,
)
from .featurestore import atomic_write_text, load_dataset
from .modelstore import load_model_dir, save_model_dir, set_working_point
from .scoring import METRICS, fit_scorer, score_sum_many, write_scores_csv
from .specfun import threshold_for_fpr
from .spectral import MODES


@dataclass(frozen=True)
class RunConfig:
    command: str
    manifest: str | None = None
    model_dir: str | None = None
    metric: str = "mahalanobis"
    shrinkage: object = "auto"
    compression: tuple | None = None
    levels: tuple | None = None
    level: str | None = None
    pool: str = "test"
    fpr: float | None = None
    k: int = 5
    seed: int = 42
    sed_eps: float | None = None
    out: str | None = None
    out_json: str | None = None
    out_txt: str | None = None


def parse_fpr(text: str) -> float:
    """FPR flag value: a bare fraction, or percent with an explicit % suffix."""
    t = text.strip()
    try:
        value = float(t[:-1]) / 100.0 if t.endswith("%") else float(t)
    except ValueError:
        raise UsageError(f"cannot parse FPR value {text!r}") from None
    if not 0.0 < value < 1.0:
        raise UsageError(f"target FPR must lie in (0, 1), got {value} from {text!r}")
    return value


def parse_compression(text: str) -> tuple | None:
    t = text.strip().lower()
    if t == "none":
        return None
    if ":" not in t:
        raise UsageError(f"compression must be 'none' or mode:q, got {text!r}")
    kind, _, qs = t.partition(":")
    if kind not in MODES:
        raise UsageError(f"unknown compression mode '{kind}' (expected one of {MODES})")
    try:
        q = float(qs)
    except ValueError:
        raise UsageError(f"cannot parse variance fraction in {text!r}") from None
    if not 0.0 < q < 1.0:
        raise UsageError(f"variance fraction q must lie in (0,1), got {q}")
    return (kind, q)


def parse_shrinkage(text: str):
    t = text.strip().lower()
    if t in ("auto", "none"):
        return t
    try:
        rho = float(t)
    except ValueError:
        raise UsageError(f"shrinkage must be 'auto', 'none', or a number, got {text!r}") from None
    if not 0.0 <= rho <= 1.0:
        raise UsageError(f"fixed shrinkage must lie in [0,1], got {rho}")
    return rho


def parse_levels(text: str) -> tuple | None:
    names = tuple(n.strip() for n in text.split(",") if n.strip())
    if not names:
        raise UsageError(f"empty --levels value {text!r}")
    return names


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage problems; this CLI reserves 2 for data errors
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="gaussad",
        description="Gaussian anomaly detection over pooled deep-feature files.",
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add_fit_options(p):
        p.add_argument("--metric", choices=METRICS, default="mahalanobis",
                       help="score function fitted per level (default mahalanobis)")
        p.add_argument("--shrinkage", default="auto", metavar="auto|none|RHO",
                       help="covariance shrinkage mode (default auto)")
        p.add_argument("--compression", default="none", metavar="none|pca:Q|npca:Q",
                       help="variance-based component selection before fitting")
        p.add_argument("--levels", default=None, metavar="NAME[,NAME...]",
                       help="restrict to these manifest levels (default all)")
        p.add_argument("--sed-eps", type=float, default=None, metavar="EPS",
                       help="floor per-feature std at EPS for the sed metric")

    p_fit = sub.add_parser("fit", help="fit one model per level on the train pool")
    p_fit.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p_fit.add_argument("--out", required=True, metavar="DIR", help="model directory to write")
    add_fit_options(p_fit)

    p_score = sub.add_parser("score", help="score samples against a fitted model directory")
    p_score.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p_score.add_argument("--model", required=True, dest="model_dir", metavar="DIR")
    p_score.add_argument("--out", required=True, metavar="CSV", help="scores CSV to write")
    p_score.add_argument("--pool", choices=("test", "train", "all"), default="test",
                         help="which samples to score (default test)")
    p_score.add_argument("--sed-eps", type=float, default=None, metavar="EPS",
                         help="override the stored sed epsilon floor")

    p_thr = sub.add_parser("threshold", help="calibrate a working point from a target FPR")
    p_thr.add_argument("--model", required=True, dest="model_dir", metavar="DIR")
    p_thr.add_argument("--level", required=True, help="level name (sum mode is refused)")
    p_thr.add_argument("--fpr", required=True, metavar="F[%]",
                       help="target false-positive rate, fraction or percent")
    p_thr.add_argument("--out", default=None, metavar="JSON",
                       help="also write the working point JSON here")

    p_eval = sub.add_parser("evaluate", help="AUROC of a fitted model on the test pool")
    p_eval.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p_eval.add_argument("--model", required=True, dest="model_dir", metavar="DIR")
    p_eval.add_argument("--level", default="sum",
                        help="level name to evaluate, or 'sum' (default)")
    p_eval.add_argument("--fpr", default=None, metavar="F[%]",
                        help="also report achieved FPR/TPR at this target FPR")
    p_eval.add_argument("--sed-eps", type=float, default=None, metavar="EPS")
    p_eval.add_argument("--out-json", default=None, metavar="PATH")

    p_kf = sub.add_parser("kfold", help="k-fold fit/score protocol with mean±SEM AUROC")
    p_kf.add_argument("--manifest", required=True, help="dataset manifest JSON")
    add_fit_options(p_kf)
    p_kf.add_argument("--k", type=int, default=5, help="number of folds (default 5)")
    p_kf.add_argument("--seed", type=int, default=42, help="shuffle seed (default 42)")
    p_kf.add_argument("--fpr", default=None, metavar="F[%]",
                      help="per-fold achieved FPR/TPR at this target FPR (single level only)")
    p_kf.add_argument("--out-json", default=None, metavar="PATH")
    p_kf.add_argument("--out-txt", default=None, metavar="PATH")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if not args.command:
        raise UsageError("a subcommand is required (fit, score, threshold, evaluate, kfold)")
    kw = {"command": args.command}
    for name in ("manifest", "model_dir", "metric", "pool", "level", "k", "seed",
                 "sed_eps", "out", "out_json", "out_txt"):
        if hasattr(args, name):
            kw[name] = getattr(args, name)
    if hasattr(args, "shrinkage"):
        kw["shrinkage"] = parse_shrinkage(args.shrinkage)
    if hasattr(args, "compression"):
        kw["compression"] = parse_compression(args.compression)
    if getattr(args, "levels", None) is not None:
        kw["levels"] = parse_levels(args.levels)
    if getattr(args, "fpr", None) is not None:
        kw["fpr"] = parse_fpr(args.fpr)
    return RunConfig(**kw)


def _emit_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path:
        atomic_write_text(path, text)
    else:
        sys.stdout.write(text)


def cmd_fit(cfg: RunConfig) -> int:
    manifest, sets, labels = load_dataset(cfg.manifest)
    train_idx, _ = split_pools(labels, require_test=False)
    selected = select_levels(sets, cfg.levels)
    scorers = [
        fit_scorer(
            fs.level_name,
            fs.data[train_idx],
            cfg.metric,
            shrinkage=cfg.shrinkage,
            compression=cfg.compression,
            sed_eps=cfg.sed_eps,
        )
        for fs in selected
    ]
    options = {
        "shrinkage": cfg.shrinkage if isinstance(cfg.shrinkage, str) else float(cfg.shrinkage),
        "compression": None
        if cfg.compression is None
        else {"mode": cfg.compression[0], "q": cfg.compression[1]},
        "sed_eps": cfg.sed_eps,
        "n_train": int(train_idx.size),
    }
    save_model_dir(cfg.out, scorers, model_id=manifest.model_id, options=options)
    return 0


def _pool_indices(labels, pool: str):
    mask = labels.train_mask
    if pool == "train":
        idx = np.flatnonzero(mask)
    elif pool == "test":
        idx = np.flatnonzero(~mask)
    else:
        idx = np.arange(len(labels))
    if idx.size == 0:
        raise DataError(f"no samples in pool '{pool}'")
    return idx


def _load_model_for(manifest, model_dir, sed_eps=None):
    scorers, top = load_model_dir(model_dir)
    if top["model_id"] != manifest.model_id:
        raise DataError(
            f"model was fitted for model_id '{top['model_id']}' but the manifest "
            f"declares '{manifest.model_id}'"
        )
    if sed_eps is not None:
        scorers = [
            dataclasses.replace(s, sed_eps=sed_eps) if s.metric == "sed" else s
            for s in scorers
        ]
    return scorers, top


def cmd_score(cfg: RunConfig) -> int:
    manifest, sets, labels = load_dataset(cfg.manifest)
    scorers, _ = _load_model_for(manifest, cfg.model_dir, cfg.sed_eps)
    idx = _pool_indices(labels, cfg.pool)
    have = {fs.level_name for fs in sets}
    needed = [s.level_name for s in scorers if s.level_name not in have]
    if needed:
        raise DataError(f"manifest lacks level(s) required by the model: {needed}")
    matrices = {
        fs.level_name: fs.data[idx]
        for fs in sets
        if fs.level_name in {s.level_name for s in scorers}
    }
    ids = [labels.sample_ids[i] for i in idx]
    records = score_sum_many(scorers, matrices, ids)
    write_scores_csv(records, cfg.out)
    return 0


def cmd_threshold(cfg: RunConfig) -> int:
    if cfg.level == "sum":
        raise UsageError("working point undefined for sum mode")
    scorers, _ = load_model_dir(cfg.model_dir)
    by_name = {s.level_name: s for s in scorers}
    if cfg.level not in by_name:
        raise UsageError(f"model has no level '{cfg.level}' (levels: {sorted(by_name)})")
    scorer = by_name[cfg.level]
    if scorer.metric != "mahalanobis":
        raise UsageError("working points are calibrated for the mahalanobis metric only")
    wp = threshold_for_fpr(scorer.model.dim, cfg.fpr)
    set_working_point(cfg.model_dir, cfg.level, wp)
    doc = {
        "level_name": cfg.level,
        "dim": wp.dim,
        "target_fpr": wp.target_fpr,
        "threshold": wp.threshold,
    }
    if cfg.out:
        _emit_json(doc, cfg.out)
    _emit_json(doc, None)
    return 0


def cmd_evaluate(cfg: RunConfig) -> int:
    manifest, sets, labels = load_dataset(cfg.manifest)
    scorers, _ = _load_model_for(manifest, cfg.model_dir, cfg.sed_eps)
    idx = _pool_indices(labels, "test")
    matrices = {
        fs.level_name: fs.data[idx]
        for fs in sets
        if fs.level_name in {s.level_name for s in scorers}
    }
    ids = [labels.sample_ids[i] for i in idx]
    records = score_sum_many(scorers, matrices, ids)
    y = labels.labels[idx]
    if cfg.level == "sum":
        scores = [r.sum_score for r in records]
    else:
        if cfg.level not in records[0].level_scores:
            raise UsageError(
                f"model has no level '{cfg.level}' (levels: {sorted(records[0].level_scores)})"
            )
        scores = [r.level_scores[cfg.level] for r in records]
    doc = {
        "level": cfg.level,
        "auroc": auroc(scores, y),
        "n_test": int(len(ids)),
        "n_normal": int((y == 0).sum()),
        "n_anomalous": int((y == 1).sum()),
    }
    if cfg.fpr is not None:
        if cfg.level == "sum":
            raise UsageError("working point undefined for sum mode")
        scorer = {s.level_name: s for s in scorers}[cfg.level]
        if scorer.metric != "mahalanobis":
            raise UsageError("working points are calibrated for the mahalanobis metric only")
        wp = threshold_for_fpr(scorer.model.dim, cfg.fpr)
        afpr, atpr = fpr_tpr_at(scores, y, wp.threshold)
        doc.update(
            target_fpr=wp.target_fpr,
            threshold=wp.threshold,
            achieved_fpr=afpr,
            achieved_tpr=atpr,
        )
    _emit_json(doc, cfg.out_json)
    if cfg.out_json:
        _emit_json(doc, None)
    return 0


def cmd_kfold(cfg: RunConfig) -> int:
    eval_cfg = EvalConfig(
        metric=cfg.metric,
        shrinkage=cfg.shrinkage,
        compression=cfg.compression,
        levels=cfg.levels,
        k=cfg.k,
        seed=cfg.seed,
        fpr=cfg.fpr,
        sed_eps=cfg.sed_eps,
    )
    report = run_kfold(cfg.manifest, eval_cfg)
    text = report_to_text(report)
    if cfg.out_json:
        _emit_json(report_to_dict(report), cfg.out_json)
    if cfg.out_txt:
        atomic_write_text(cfg.out_txt, text)
    sys.stdout.write(text)
    return 0


_DISPATCH = {
    "fit": cmd_fit,
    "score": cmd_score,
    "threshold": cmd_threshold,
    "evaluate": cmd_evaluate,
    "kfold": cmd_kfold,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = config_from_args(args)
        return _DISPATCH[cfg.command](cfg)
    except GaussAdError as exc:
        message = " ".join(str(exc).split())
        print(f"error: {message}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
