"""Chi-square distribution helpers with the argument checks used in this package.

Thin wrappers over :mod:`scipy.special` and :mod:`scipy.stats`; scalar in,
scalar out.
"""

from __future__ import annotations

from scipy import special, stats

__all__ = ["regularized_gamma_p", "regularized_gamma_q", "chi2_cdf", "chi2_sf", "chi2_pdf",
           "chi2_quantile"]


def _check_gamma_args(a, x):
    if a <= 0:
        raise ValueError("shape must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")


def regularized_gamma_p(a: float, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a) for a > 0, x >= 0."""
    _check_gamma_args(a, x)
    return float(special.gammainc(a, x))


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper tail Q(a, x) = 1 - P(a, x), accurate when it is small."""
    _check_gamma_args(a, x)
    return float(special.gammaincc(a, x))


def chi2_cdf(x: float, df: float) -> float:
    return 0.0 if x <= 0 else regularized_gamma_p(0.5 * df, 0.5 * x)


def chi2_sf(x: float, df: float) -> float:
    return 1.0 if x <= 0 else regularized_gamma_q(0.5 * df, 0.5 * x)


def chi2_pdf(x: float, df: float) -> float:
    return float(stats.chi2.pdf(x, df))


def chi2_quantile(prob: float, df: float) -> float:
    """Inverse of :func:`chi2_cdf` for ``0 <= prob < 1``."""
    if not 0.0 <= prob < 1.0:
        raise ValueError("prob must lie in [0, 1)")
    if df <= 0:
        raise ValueError("df must be positive")
    if prob == 0.0:
        return 0.0
    # the upper-tail inverse keeps relative accuracy for prob near one
    if prob > 0.5:
        return float(special.gammainccinv(0.5 * df, 1.0 - prob) * 2.0)
    return float(special.gammaincinv(0.5 * df, prob) * 2.0)
