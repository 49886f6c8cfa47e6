"""Special functions for the chi-square working point.

Everything here is scalar float64 and self-contained: log-gamma via a
Lanczos approximation, the regularized lower incomplete gamma function via
the classic series / continued-fraction split, and the chi-square
pdf / cdf / quantile built on top. The quantile uses a Wilson-Hilferty
initial guess polished by a bracketed Newton iteration until the cdf
residual drops below 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NumericError, UsageError

LN_SQRT_2PI = 0.9189385332046727417803297364056176

# Lanczos, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

# Asymptotic (Stirling) correction: lgamma(s) = (s-1/2)ln s - s + ln sqrt(2pi) + J(s),
# J(s) = sum c_k / s^(2k-1). Used only for s >= 10 where the tail is negligible.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)


def log_gamma(s: float) -> float:
    """ln Gamma(s) for s > 0."""
    if not s > 0.0:
        raise NumericError(f"log_gamma requires s > 0, got {s}")
    if s < 0.5:
        # reflection onto [0.5, 1.5): lgamma(s) = lgamma(s+1) - ln s
        return log_gamma(s + 1.0) - math.log(s)
    x = _LANCZOS_COEF[0]
    for i in range(1, 9):
        x += _LANCZOS_COEF[i] / (s + i - 1.0)
    t = s + _LANCZOS_G - 0.5
    # (s-0.5)*ln t - t rewritten to avoid cancellation for large t
    return LN_SQRT_2PI + (s - 0.5) * (math.log(t) - 1.0) - _LANCZOS_G + math.log(x)


def _stirling_correction(s: float) -> float:
    r = 0.0
    p = s
    s2 = s * s
    for c in _STIRLING:
        r += c / p
        p *= s2
    return r


def _log_prefactor(s: float, x: float) -> float:
    """log( x^s e^-x / Gamma(s) ), stable for large s with x near s."""
    if x == 0.0:
        return -math.inf
    if s >= 10.0:
        d = (x - s) / s
        if abs(d) < 0.5:
            # s ln x - x - lgamma(s) = -s(d - log1p(d)) + 0.5 ln s - ln sqrt(2pi) - J(s);
            # the naive form loses ~s ulps when x ~ s.
            phi = d - math.log1p(d)
            return -s * phi + 0.5 * math.log(s) - LN_SQRT_2PI - _stirling_correction(s)
    return s * math.log(x) - x - log_gamma(s)


def _lower_series(s: float, x: float) -> float:
    # P(s,x) = prefac / s * sum_k x^k / prod_{j<=k}(s+j); converges for x < s+1
    total = 1.0
    term = 1.0
    ap = s
    for _ in range(10000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return math.exp(_log_prefactor(s, x)) * total / s


def _upper_cf(s: float, x: float) -> float:
    # Q(s,x) = prefac * continued fraction, evaluated with modified Lentz
    tiny = 1e-300
    b = x + 1.0 - s
    c = 1.0 / tiny
    d = 1.0 / b if b != 0.0 else 1.0 / tiny
    h = d
    for i in range(1, 10000):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-17:
            break
    return math.exp(_log_prefactor(s, x)) * h


def reg_lower_inc_gamma(s: float, x: float) -> float:
    """Regularized lower incomplete gamma P(s, x) for s > 0, x >= 0."""
    if not s > 0.0:
        raise NumericError(f"reg_lower_inc_gamma requires s > 0, got {s}")
    if x < 0.0:
        raise NumericError(f"reg_lower_inc_gamma requires x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if x < s + 1.0:
        return min(_lower_series(s, x), 1.0)
    return max(1.0 - _upper_cf(s, x), 0.0)


def _check_dof(k: int) -> None:
    if not isinstance(k, (int,)) or isinstance(k, bool) or k < 1:
        raise UsageError(f"degrees of freedom must be a positive integer, got {k!r}")


def chi2_pdf(k: int, x: float) -> float:
    """Chi-square density with k degrees of freedom at x."""
    _check_dof(k)
    if x < 0.0:
        return 0.0
    h = 0.5 * k
    if x == 0.0:
        # finite only for k = 2 (value 1/2); diverges for k = 1
        if k == 1:
            return math.inf
        return 0.5 if k == 2 else 0.0
    return math.exp((h - 1.0) * math.log(x) - 0.5 * x - h * math.log(2.0) - log_gamma(h))


def chi2_cdf(k: int, x: float) -> float:
    """Chi-square cdf F_k(x) = P(k/2, x/2)."""
    _check_dof(k)
    if x <= 0.0:
        return 0.0
    return reg_lower_inc_gamma(0.5 * k, 0.5 * x)


# Acklam's rational approximation to the standard normal quantile
# (|error| < 1.15e-9 over (0,1)); only the chi-square initializer uses it.
_ACKLAM_A = (
    -3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
    1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00,
)
_ACKLAM_B = (
    -5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
    6.680131188771972e01, -1.328068155288572e01,
)
_ACKLAM_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
    -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00,
)
_ACKLAM_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
    3.754408661907416e00,
)


def normal_quantile(p: float) -> float:
    """Standard normal quantile (approximate; feeds the chi-square initializer)."""
    if not 0.0 < p < 1.0:
        raise NumericError(f"normal_quantile requires 0 < p < 1, got {p}")
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    plow, phigh = 0.02425, 1.0 - 0.02425
    if p < plow:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if p > phigh:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    )


def chi2_inverse_cdf(k: int, p: float, tol: float = 1e-12) -> float:
    """Inverse chi-square cdf: the x with F_k(x) = p, to |F_k(x) - p| <= tol.

    Wilson-Hilferty start, then Newton steps safeguarded by a maintained
    bracket; any step leaving the bracket falls back to bisection.
    """
    _check_dof(k)
    if p == 1.0:
        raise NumericError("chi2_inverse_cdf is unbounded at p = 1")
    if not 0.0 <= p < 1.0:
        raise NumericError(f"chi2_inverse_cdf requires 0 <= p < 1, got {p}")
    if p == 0.0:
        return 0.0
    z = normal_quantile(p)
    c = 2.0 / (9.0 * k)
    x = k * (1.0 - c + z * math.sqrt(c)) ** 3
    if x <= 0.0:
        x = 1e-8
    lo = 0.0
    hi = max(x, 1e-8)
    while chi2_cdf(k, hi) < p:
        lo = hi
        hi *= 2.0
        if hi > 1e300:
            raise NumericError(f"chi2_inverse_cdf failed to bracket p={p} for k={k}")
    if not lo < x < hi:
        x = 0.5 * (lo + hi)
    for _ in range(200):
        err = chi2_cdf(k, x) - p
        if abs(err) <= tol:
            return x
        if err < 0.0:
            lo = x
        else:
            hi = x
        f = chi2_pdf(k, x)
        xn = x - err / f if f > 0.0 else 0.5 * (lo + hi)
        if not lo < xn < hi:
            xn = 0.5 * (lo + hi)
        if xn == x:
            return x
        x = xn
    return x


@dataclass(frozen=True)
class WorkingPoint:
    """Distance threshold calibrated to a target false-positive rate.

    For a model of dimension `dim`, squared Mahalanobis scores of normal
    samples are chi-square distributed with `dim` degrees of freedom, so
    threshold = sqrt(F_dim^{-1}(1 - target_fpr)).
    """

    dim: int
    target_fpr: float
    threshold: float

    def __post_init__(self):
        if not 0.0 < self.target_fpr < 1.0:
            raise UsageError(f"target FPR must lie in (0, 1), got {self.target_fpr}")
        if not self.threshold > 0.0:
            raise NumericError(f"threshold must be positive, got {self.threshold}")


def threshold_for_fpr(dim: int, fpr: float) -> WorkingPoint:
    """Working point with P(M > threshold) = fpr under the fitted model."""
    _check_dof(dim)
    if not 0.0 < fpr < 1.0:
        raise UsageError(f"target FPR must lie in (0, 1), got {fpr}")
    t = math.sqrt(chi2_inverse_cdf(dim, 1.0 - fpr))
    return WorkingPoint(dim=dim, target_fpr=fpr, threshold=t)
