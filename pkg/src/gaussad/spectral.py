"""Variance-based component selection on the training covariance.

Two selection modes over the descending eigenvalue sequence:

* pca(q): the minimal prefix whose cumulative variance reaches at least
  q * total. Keeps the high-variance directions.
* npca(q): the maximal suffix whose cumulative variance stays at or below
  q * total, floored at one component. Keeps the low-variance directions,
  which is where subtle anomalies tend to live.

Selection always runs on the shrinkage-free sample covariance; the Gaussian
fitted in the reduced space afterward applies its own shrinkage.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericError, UsageError
from .gaussian import fit_empirical

MODES = ("pca", "npca")


def _check_mode(kind: str, q: float) -> None:
    if kind not in MODES:
        raise UsageError(f"unknown compression mode '{kind}' (expected one of {MODES})")
    if not 0.0 < q < 1.0:
        raise UsageError(f"variance fraction q must lie in (0,1), got {q}")


@dataclass(frozen=True)
class Projection:
    """Orthonormal basis of selected eigenvectors plus the centering vector.

    gram_tol is the orthonormality tolerance enforced at construction. A
    freshly computed basis meets 1e-10; a basis reloaded from binary32
    storage only meets storage precision, so loaders pass a looser value.
    """

    basis: np.ndarray
    eigenvalues: np.ndarray
    mode: str
    q: float
    total_variance: float
    center: np.ndarray
    gram_tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "basis", np.asarray(self.basis, dtype=np.float64))
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=np.float64))
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        _check_mode(self.mode, self.q)
        D, d = self.basis.shape
        if d < 1 or d > D:
            raise DataError(f"projection basis shape {self.basis.shape} is invalid")
        if self.eigenvalues.shape != (d,):
            raise DataError("eigenvalue count disagrees with basis columns")
        if self.center.shape != (D,):
            raise DataError("center length disagrees with basis rows")
        gram = self.basis.T @ self.basis
        if np.abs(gram - np.eye(d)).max() > self.gram_tol:
            raise NumericError(
                f"projection basis columns are not orthonormal to {self.gram_tol:g}"
            )

    @property
    def in_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def out_dim(self) -> int:
        return self.basis.shape[1]


def eigendecompose(cov) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching orthonormal eigenvectors.

    Small negative eigenvalues from rounding are clipped to zero; genuinely
    negative spectra are rejected.
    """
    cov = np.asarray(cov, dtype=np.float64)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise DataError(f"expected a square matrix, got shape {cov.shape}")
    scale = np.abs(cov).max()
    asym = np.abs(cov - cov.T).max()
    if asym > 1e-10 * max(scale, 1.0):
        raise NumericError(f"matrix asymmetry {asym:.3e} exceeds 1e-10")
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    order = np.argsort(vals)[::-1]
    vals = vals[order]
    vecs = vecs[:, order]
    tol = 1e-12 * max(1.0, float(vals[0]) if vals.size else 1.0)
    if vals.size and vals[-1] < -tol:
        raise NumericError(f"matrix is not positive semidefinite (lambda_min = {vals[-1]:.3e})")
    return np.clip(vals, 0.0, None), vecs


def select_components(eigenvalues, kind: str, q: float) -> np.ndarray:
    """Indices into the descending eigenvalue sequence, per the mode's rule."""
    _check_mode(kind, q)
    vals = np.asarray(eigenvalues, dtype=np.float64)
    if vals.ndim != 1 or vals.size == 0:
        raise DataError(f"expected a nonempty eigenvalue vector, got shape {vals.shape}")
    if (vals < 0).any():
        raise NumericError("negative eigenvalues")
    if (np.diff(vals) > 0).any():
        raise DataError("eigenvalues must be sorted descending")
    total = float(vals.sum())
    if total <= 0.0:
        raise NumericError("all eigenvalues are zero, no variance to select")
    # cumulative-sum boundaries compare with a relative slack so that exact
    # fractions (0.9 * 10 = 9.000000000000002) land on the intended side
    slack = 1e-12 * total
    if kind == "pca":
        cum = np.cumsum(vals)
        idx = int(np.searchsorted(cum, q * total - slack))
        idx = min(idx, vals.size - 1)
        return np.arange(0, idx + 1)
    cum_back = np.cumsum(vals[::-1])  # suffix sums, smallest first
    keep = int(np.searchsorted(cum_back, q * total + slack, side="right"))
    keep = max(keep, 1)  # floor of one component
    return np.arange(vals.size - keep, vals.size)


def project(proj: Projection, X) -> np.ndarray:
    """(X - center) @ basis for a vector or a stack of row vectors."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        if X.shape[0] != proj.in_dim:
            raise DataError(f"expected a vector of length {proj.in_dim}, got {X.shape[0]}")
        return (X - proj.center) @ proj.basis
    if X.ndim == 2:
        if X.shape[1] != proj.in_dim:
            raise DataError(f"expected {proj.in_dim} columns, got {X.shape[1]}")
        return (X - proj.center) @ proj.basis
    raise DataError(f"expected a vector or matrix, got shape {X.shape}")


def fit_projection(X, kind: str, q: float) -> Projection:
    """Select components of X's sample covariance and package the projection."""
    mean, cov = fit_empirical(X)
    vals, vecs = eigendecompose(cov)
    idx = select_components(vals, kind, q)
    return Projection(
        basis=vecs[:, idx],
        eigenvalues=vals[idx],
        mode=kind,
        q=q,
        total_variance=float(vals.sum()),
        center=mean,
    )
