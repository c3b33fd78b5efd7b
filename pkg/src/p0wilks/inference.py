"""Likelihood-ratio and Wald tests of degree heterogeneity.

Reference distributions:

* ``chisq``: ``2 * (l_full - l_null)`` against chi-square with ``r - 1``
  degrees of freedom; homogeneous nulls with a fixed, small ``r`` only.
* ``normal``: ``(2 * (l_full - l_null) - r) / sqrt(2 r)`` against the
  standard normal, one-sided upper; for a growing ``r`` under either kind
  of null.

A specified null with small ``r`` has no usable reference: the deviance is
not chi-square there. ``ref="auto"`` then reports the statistic with
reference ``"none"`` and no p-value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimation import (
    ALPHA,
    BETA,
    DEFAULT_EPS,
    DEFAULT_MAX_ITER,
    FitResult,
    NullHypothesis,
    fit_mle,
    fit_null,
)
from .exceptions import InvalidNullError, InvalidReferenceError
from .graph import DirectedGraph
from .model import mu_prime

__all__ = [
    "DEFAULT_R_SWITCH",
    "TestResult",
    "chisq_cdf",
    "chisq_ppf",
    "chisq_sf",
    "lrt",
    "normal_cdf",
    "normal_ppf",
    "normal_sf",
    "regularized_gamma",
    "resolve_reference",
    "wald",
]

DEFAULT_R_SWITCH = 30

CHISQ, NORMAL, NONE, AUTO = "chisq", "normal", "none", "auto"
LRT_CHISQ, LRT_NORMAL, WALD = "lrt_chisq", "lrt_normal", "wald"

_SQRT2 = math.sqrt(2.0)
_NO_CHISQ = (
    "no chi-square reference exists for a specified null of fixed dimension: "
    "the log-likelihood ratio is not asymptotically chi-square there; "
    "use the normal reference for a growing number of constrained parameters"
)


# -- special functions --------------------------------------------------------


def normal_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / _SQRT2)


def normal_sf(x: float) -> float:
    return 0.5 * math.erfc(x / _SQRT2)


def _gamma_series(a: float, x: float) -> float:
    # lower regularized P(a, x), converges quickly for x < a + 1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(100000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_contfrac(a: float, x: float) -> float:
    # upper regularized Q(a, x) by modified Lentz, for x >= a + 1
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 100000):
        an = -i * (i - a)
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
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma(a: float, x: float) -> tuple[float, float]:
    """Return ``(P(a, x), Q(a, x))``, the regularized incomplete gamma pair."""
    if a <= 0:
        raise ValueError("shape must be positive")
    if x < 0:
        raise ValueError("x must be non-negative")
    if x == 0:
        return 0.0, 1.0
    if math.isinf(x):
        return 1.0, 0.0
    if x < a + 1.0:
        p = _gamma_series(a, x)
        return p, 1.0 - p
    q = _gamma_contfrac(a, x)
    return 1.0 - q, q


def chisq_cdf(x: float, df: float) -> float:
    if x < 0:
        raise ValueError(f"chi-square CDF is defined for x >= 0, got {x}")
    return regularized_gamma(df / 2.0, x / 2.0)[0]


def chisq_sf(x: float, df: float) -> float:
    if x < 0:
        raise ValueError(f"chi-square survival function is defined for x >= 0, got {x}")
    return regularized_gamma(df / 2.0, x / 2.0)[1]


def _bisect(cdf, q: float, lo: float, hi: float, tol: float) -> float:
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if cdf(mid) < q:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def normal_ppf(q: float, tol: float = 1e-10) -> float:
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    return _bisect(normal_cdf, q, -40.0, 40.0, tol)


def chisq_ppf(q: float, df: float, tol: float = 1e-10) -> float:
    if not 0.0 < q < 1.0:
        raise ValueError("quantile level must lie in (0, 1)")
    hi = max(1.0, 2.0 * df)
    while chisq_cdf(hi, df) < q:
        hi *= 2.0
    return _bisect(lambda x: chisq_cdf(x, df), q, 0.0, hi, tol)


# -- tests -------------------------------------------------------------------


@dataclass
class TestResult:
    """Outcome of one test.

    ``statistic`` is on the scale of ``reference``: the raw deviance for
    ``chisq``, the centered and scaled deviance for ``normal``, the Wald
    quadratic form for ``wald``. ``deviance`` always holds the raw
    ``2 * (l_full - l_null)`` for likelihood-ratio tests.
    """

    __test__ = False  # not a pytest class

    method: str
    statistic: float
    reference: str
    df: int | None
    p_value: float | None
    r: int
    null: NullHypothesis
    full_fit: FitResult
    null_fit: FitResult | None = None
    deviance: float | None = None

    def reference_label(self) -> str:
        if self.reference == CHISQ:
            return f"chisq(df={self.df})"
        return self.reference

    def to_dict(self, include_fits: bool = True) -> dict:
        out = {
            "method": self.method,
            "statistic": self.statistic,
            "deviance": self.deviance,
            "reference": self.reference,
            "df": self.df,
            "p_value": self.p_value,
            "r": self.r,
            "null": self.null.to_dict(),
        }
        if include_fits:
            out["full_fit"] = self.full_fit.to_dict()
            out["null_fit"] = None if self.null_fit is None else self.null_fit.to_dict()
        return out


def resolve_reference(null: NullHypothesis, ref: str = AUTO, r_switch: int = DEFAULT_R_SWITCH) -> str:
    """Map a requested reference to ``"chisq"``, ``"normal"`` or ``"none"``."""
    if ref not in (CHISQ, NORMAL, AUTO):
        raise InvalidReferenceError(f"unknown reference {ref!r}")
    if ref == CHISQ:
        if not null.is_homogeneous:
            raise InvalidReferenceError(_NO_CHISQ)
        return CHISQ
    if ref == NORMAL:
        return NORMAL
    if null.r > r_switch:
        return NORMAL
    return CHISQ if null.is_homogeneous else NONE


def lrt_from_fits(
    full: FitResult, restricted: FitResult, null: NullHypothesis, reference: str
) -> TestResult:
    r = null.r
    dev = 2.0 * (full.loglik - restricted.loglik)
    if reference == CHISQ:
        df = r - 1
        return TestResult(LRT_CHISQ, dev, CHISQ, df, chisq_sf(max(dev, 0.0), df), r, null, full, restricted, dev)
    if reference == NORMAL:
        stat = (dev - r) / math.sqrt(2.0 * r)
        return TestResult(LRT_NORMAL, stat, NORMAL, None, normal_sf(stat), r, null, full, restricted, dev)
    return TestResult(LRT_CHISQ, dev, NONE, None, None, r, null, full, restricted, dev)


def lrt(
    g: DirectedGraph,
    null: NullHypothesis,
    ref: str = AUTO,
    r_switch: int = DEFAULT_R_SWITCH,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    full: FitResult | None = None,
) -> TestResult:
    """Likelihood-ratio test of ``null`` on ``g``.

    A precomputed unrestricted fit may be passed as ``full``. Fit errors
    propagate.
    """
    null.validate(g.n)
    reference = resolve_reference(null, ref, r_switch)
    if full is None:
        full = fit_mle(g, eps=eps, max_iter=max_iter)
    restricted = fit_null(g, null, eps=eps, max_iter=max_iter)
    return lrt_from_fits(full, restricted, null, reference)


def wald_statistic(estimates: np.ndarray, info_diag: np.ndarray) -> float:
    """Quadratic form in consecutive differences of ``estimates`` with the
    tridiagonal covariance built from the information diagonal."""
    est = np.asarray(estimates, dtype=float)
    inv = 1.0 / np.asarray(info_diag, dtype=float)
    diffs = est[:-1] - est[1:]
    k = diffs.size
    cov = np.zeros((k, k))
    idx = np.arange(k)
    cov[idx, idx] = inv[:-1] + inv[1:]
    cov[idx[:-1], idx[1:]] = -inv[1:-1]
    cov[idx[1:], idx[:-1]] = -inv[1:-1]
    return float(diffs @ np.linalg.solve(cov, diffs))


def wald(
    g: DirectedGraph,
    indices,
    side: str = ALPHA,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    full: FitResult | None = None,
) -> TestResult:
    """Wald test that the ``side`` parameters at ``indices`` are equal,
    referred to chi-square with ``r - 1`` degrees of freedom."""
    null = NullHypothesis.homogeneous(indices, side=side)
    null.validate(g.n)
    if full is None:
        full = fit_mle(g, eps=eps, max_iter=max_iter)
    theta = full.theta
    w = mu_prime(theta.logits())
    np.fill_diagonal(w, 0.0)
    idx = np.asarray(null.indices) - 1
    if side == BETA:
        est, info = theta.beta[idx], w.sum(axis=0)[idx]
    else:
        est, info = theta.alpha[idx], w.sum(axis=1)[idx]
    if np.any(info <= 0):
        raise InvalidNullError("information is zero for a tested parameter")
    stat = wald_statistic(est, info)
    df = null.r - 1
    return TestResult(WALD, stat, CHISQ, df, chisq_sf(max(stat, 0.0), df), null.r, null, full)
