"""Multivariate Gaussian fitting with Ledoit-Wolf shrinkage, plus the
Mahalanobis / SED / L2 score functions.

The covariance returned to callers always uses the n-1 divisor. The
shrinkage intensity computation internally uses the n divisor, which is
what the closed-form Ledoit-Wolf (2004) estimator is derived for; both
conventions are deliberate and tested.

All statistics are computed in binary64 regardless of storage precision.
Mahalanobis distances go through triangular solves against the Cholesky
factor; the covariance is never explicitly inverted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DataError, NumericError, UsageError

LN_2PI = math.log(2.0 * math.pi)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise DataError(f"expected an n x D matrix, got shape {X.shape}")
    if not np.isfinite(X).all():
        raise DataError("non-finite values in feature matrix")
    return X


@dataclass(frozen=True)
class GaussianModel:
    """Fitted Gaussian: mean, (possibly shrunk) covariance, Cholesky factor."""

    mean: np.ndarray
    covariance: np.ndarray
    chol_factor: np.ndarray
    dim: int
    shrinkage: float
    n_fit: int

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "covariance", np.asarray(self.covariance, dtype=np.float64))
        object.__setattr__(self, "chol_factor", np.asarray(self.chol_factor, dtype=np.float64))
        D = self.dim
        if D < 1:
            raise DataError(f"dim must be >= 1, got {D}")
        if self.n_fit < 2:
            raise DataError(f"n_fit must be >= 2, got {self.n_fit}")
        if not 0.0 <= self.shrinkage <= 1.0:
            raise NumericError(f"shrinkage must lie in [0,1], got {self.shrinkage}")
        if self.mean.shape != (D,) or self.covariance.shape != (D, D):
            raise DataError("model field shapes disagree with dim")
        if self.chol_factor.shape != (D, D):
            raise DataError("chol_factor shape disagrees with dim")
        scale = np.abs(self.covariance).max()
        asym = np.abs(self.covariance - self.covariance.T).max()
        if scale > 0 and asym > 1e-12 * scale:
            raise NumericError(f"covariance asymmetry {asym:.3e} exceeds 1e-12 relative")
        resid = np.linalg.norm(self.chol_factor @ self.chol_factor.T - self.covariance)
        ref = np.linalg.norm(self.covariance)
        if ref > 0 and resid > 1e-10 * ref:
            raise NumericError(f"Cholesky factor residual {resid:.3e} exceeds 1e-10 relative")


@dataclass(frozen=True)
class DiagonalModel:
    """Per-feature mean and standard deviation (n-1 divisor)."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=np.float64))
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise DataError("mean and std must be vectors of equal length")
        if (self.std < 0).any():
            raise NumericError("negative standard deviation")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_empirical(X) -> tuple[np.ndarray, np.ndarray]:
    """Column mean and unbiased (n-1 divisor) sample covariance."""
    X = _as_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise DataError(f"insufficient samples: covariance needs n >= 2, got {n}")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / (n - 1)
    cov = 0.5 * (cov + cov.T)  # exact symmetry despite matmul rounding
    return mean, cov


def ledoit_wolf_rho(X) -> float:
    """Closed-form Ledoit-Wolf (2004) shrinkage intensity.

    With S the n-divisor sample covariance and m = tr(S)/D:
    d^2 = ||S - mI||_F^2 / D, b^2 = min(d^2, mean_i ||x_i'x_i'^T - S||_F^2 / (n^2 D)),
    rho = b^2/d^2 clipped to [0, 1]. Degenerate data (all rows equal) gives 1.
    """
    X = _as_matrix(X)
    n, D = X.shape
    if n < 2:
        raise DataError(f"insufficient samples: shrinkage needs n >= 2, got {n}")
    if np.all(X == X[0]):
        return 1.0  # d^2 = 0: identity target is the only PD completion
    Xc = X - X.mean(axis=0)
    S = (Xc.T @ Xc) / n
    m = np.trace(S) / D
    frob_S = float((S * S).sum())
    d2 = (frob_S - 2.0 * m * np.trace(S) + D * m * m) / D  # ||S - mI||_F^2 / D
    if d2 <= 0.0:
        return 1.0
    # sum_i ||x_i' x_i'^T - S||_F^2 = sum_i ||x_i'||^4 - n ||S||_F^2
    sq_norms = (Xc * Xc).sum(axis=1)
    b2_raw = (float((sq_norms * sq_norms).sum()) - n * frob_S) / (n * n * D)
    b2 = min(d2, max(b2_raw, 0.0))
    return min(b2 / d2, 1.0)


def _cholesky_with_retry(cov: np.ndarray, rho: float) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        pass
    if rho > 0.0:
        # rounding can push a near-singular shrunk matrix indefinite; one
        # jitter retry before giving up
        D = cov.shape[0]
        jitter = 1e-10 * np.trace(cov) / D
        try:
            return np.linalg.cholesky(cov + jitter * np.eye(D))
        except np.linalg.LinAlgError:
            pass
    raise NumericError("singular covariance: Cholesky factorization failed")


def fit_gaussian(X, shrinkage="auto") -> GaussianModel:
    """Fit a Gaussian; `shrinkage` is "auto", "none", or a fixed rho in [0,1].

    The fitted covariance is (1-rho) * S + rho * (tr(S)/D) * I with S the
    n-1 divisor sample covariance.
    """
    X = _as_matrix(X)
    n, D = X.shape
    mean, cov = fit_empirical(X)
    if shrinkage == "auto":
        rho = ledoit_wolf_rho(X)
    elif shrinkage == "none":
        rho = 0.0
    elif isinstance(shrinkage, (int, float)) and not isinstance(shrinkage, bool):
        rho = float(shrinkage)
        if not 0.0 <= rho <= 1.0:
            raise UsageError(f"fixed shrinkage must lie in [0,1], got {rho}")
    else:
        raise UsageError(f"shrinkage must be 'auto', 'none', or a number, got {shrinkage!r}")
    mu_trace = np.trace(cov) / D
    shrunk = (1.0 - rho) * cov + rho * mu_trace * np.eye(D)
    shrunk = 0.5 * (shrunk + shrunk.T)
    L = _cholesky_with_retry(shrunk, rho)
    return GaussianModel(
        mean=mean, covariance=shrunk, chol_factor=L, dim=D, shrinkage=rho, n_fit=n
    )


def _check_vector(model_dim: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model_dim,):
        raise DataError(f"expected a vector of length {model_dim}, got shape {x.shape}")
    return x


def mahalanobis(model: GaussianModel, x) -> float:
    """M(x) = sqrt((x-mu)^T Sigma^-1 (x-mu)) via a triangular solve."""
    x = _check_vector(model.dim, x)
    z = solve_triangular(model.chol_factor, x - model.mean, lower=True)
    return float(np.linalg.norm(z))


def mahalanobis_many(model: GaussianModel, X) -> np.ndarray:
    """Mahalanobis distance of every row of X (one factorization, one solve)."""
    X = _as_matrix(X)
    if X.shape[1] != model.dim:
        raise DataError(f"expected {model.dim} columns, got {X.shape[1]}")
    Z = solve_triangular(model.chol_factor, (X - model.mean).T, lower=True)
    return np.sqrt((Z * Z).sum(axis=0))


def log_density(model: GaussianModel, x) -> float:
    """log of the Gaussian density at x.

    log phi(x) = -M(x)^2/2 - (D ln 2pi + ln det Sigma)/2, with
    ln det Sigma = 2 sum ln diag(L).
    """
    m = mahalanobis(model, x)
    logdet = 2.0 * float(np.log(np.diag(model.chol_factor)).sum())
    return -0.5 * m * m - 0.5 * (model.dim * LN_2PI + logdet)


def fit_diagonal(X) -> DiagonalModel:
    """Per-feature mean and n-1 divisor standard deviation."""
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise DataError(f"insufficient samples: std needs n >= 2, got {X.shape[0]}")
    return DiagonalModel(mean=X.mean(axis=0), std=X.std(axis=0, ddof=1))


def sed(model: DiagonalModel, x, eps: float | None = None) -> float:
    """Standardized Euclidean distance sqrt(sum_d ((x_d - mean_d)/std_d)^2).

    Zero-variance features make the distance undefined; pass `eps` to floor
    each std at eps instead of erroring.
    """
    x = _check_vector(model.dim, x)
    std = model.std
    if eps is not None:
        if eps <= 0:
            raise UsageError(f"sed epsilon must be positive, got {eps}")
        std = np.maximum(std, eps)
    zero = np.flatnonzero(std == 0.0)
    if zero.size:
        raise NumericError(
            "sed undefined: zero-variance feature indices "
            f"{zero.tolist()} (use an epsilon floor to score anyway)"
        )
    d = (x - model.mean) / std
    return float(np.linalg.norm(d))


def sed_many(model: DiagonalModel, X, eps: float | None = None) -> np.ndarray:
    X = _as_matrix(X)
    if X.shape[1] != model.dim:
        raise DataError(f"expected {model.dim} columns, got {X.shape[1]}")
    std = model.std
    if eps is not None:
        if eps <= 0:
            raise UsageError(f"sed epsilon must be positive, got {eps}")
        std = np.maximum(std, eps)
    zero = np.flatnonzero(std == 0.0)
    if zero.size:
        raise NumericError(
            "sed undefined: zero-variance feature indices "
            f"{zero.tolist()} (use an epsilon floor to score anyway)"
        )
    D = (X - model.mean) / std
    return np.sqrt((D * D).sum(axis=1))


def l2(mean, x) -> float:
    """Euclidean distance of x from the mean."""
    mean = np.asarray(mean, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if mean.shape != x.shape or mean.ndim != 1:
        raise DataError(f"dimension mismatch: mean {mean.shape} vs x {x.shape}")
    return float(np.linalg.norm(x - mean))


def l2_many(mean, X) -> np.ndarray:
    mean = np.asarray(mean, dtype=np.float64)
    X = _as_matrix(X)
    if X.shape[1] != mean.shape[0]:
        raise DataError(f"expected {mean.shape[0]} columns, got {X.shape[1]}")
    D = X - mean
    return np.sqrt((D * D).sum(axis=1))
