"""Gaussian anomaly detection over pooled deep-feature vectors.

Fit a multivariate Gaussian (with Ledoit-Wolf covariance shrinkage) to each
feature level of a normal-only training set, score samples by Mahalanobis
distance (or SED / L2), sum scores across levels, and calibrate decision
thresholds analytically from a target false-positive rate via the
chi-square law of squared Mahalanobis distances.
"""

from .errors import DataError, GaussAdError, NumericError, UsageError
from .evaluation import (
    EvalConfig,
    EvalReport,
    FoldResult,
    auroc,
    fpr_tpr_at,
    kfold_split,
    run_kfold,
)
from .featurestore import (
    DatasetManifest,
    FeatureSet,
    LabelTable,
    LevelEntry,
    load_dataset,
    load_manifest,
    read_feature_file,
    read_labels,
    read_matrix,
    save_manifest,
    write_feature_file,
    write_labels,
    write_matrix,
)
from .gaussian import (
    DiagonalModel,
    GaussianModel,
    fit_diagonal,
    fit_empirical,
    fit_gaussian,
    l2,
    ledoit_wolf_rho,
    log_density,
    mahalanobis,
    mahalanobis_many,
    sed,
)
from .modelstore import load_model_dir, save_model_dir
from .scoring import (
    LevelScorer,
    ScoreRecord,
    classify,
    fit_scorer,
    score_level,
    score_sum,
    write_scores_csv,
)
from .specfun import (
    WorkingPoint,
    chi2_cdf,
    chi2_inverse_cdf,
    chi2_pdf,
    log_gamma,
    reg_lower_inc_gamma,
    threshold_for_fpr,
)
from .spectral import Projection, eigendecompose, fit_projection, project, select_components

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "GaussAdError",
    "NumericError",
    "UsageError",
    "EvalConfig",
    "EvalReport",
    "FoldResult",
    "auroc",
    "fpr_tpr_at",
    "kfold_split",
    "run_kfold",
    "DatasetManifest",
    "FeatureSet",
    "LabelTable",
    "LevelEntry",
    "load_dataset",
    "load_manifest",
    "read_feature_file",
    "read_labels",
    "read_matrix",
    "save_manifest",
    "write_feature_file",
    "write_labels",
    "write_matrix",
    "DiagonalModel",
    "GaussianModel",
    "fit_diagonal",
    "fit_empirical",
    "fit_gaussian",
    "l2",
    "ledoit_wolf_rho",
    "log_density",
    "mahalanobis",
    "mahalanobis_many",
    "sed",
    "load_model_dir",
    "save_model_dir",
    "LevelScorer",
    "ScoreRecord",
    "classify",
    "fit_scorer",
    "score_level",
    "score_sum",
    "write_scores_csv",
    "WorkingPoint",
    "chi2_cdf",
    "chi2_inverse_cdf",
    "chi2_pdf",
    "log_gamma",
    "reg_lower_inc_gamma",
    "threshold_for_fpr",
    "Projection",
    "eigendecompose",
    "fit_projection",
    "project",
    "select_components",
]
