"""Sampling from the p0 model and Monte Carlo calibration of the tests."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .estimation import DEFAULT_EPS, DEFAULT_MAX_ITER, NullHypothesis, fit_mle, fit_null
from .exceptions import DegenerateDegreeError, InvalidReferenceError, NonConvergenceError
from .graph import DirectedGraph
from .inference import (
    AUTO,
    CHISQ,
    DEFAULT_R_SWITCH,
    NONE,
    NORMAL,
    chisq_cdf,
    chisq_ppf,
    lrt_from_fits,
    normal_cdf,
    normal_ppf,
    resolve_reference,
    wald,
)
from .model import Theta, mu

__all__ = [
    "DEFAULT_LEVELS",
    "Scenario",
    "SimulationReport",
    "ks_distance",
    "monte_carlo",
    "qq_data",
    "replicate_rng",
    "sample_graph",
    "scenario_h01",
    "scenario_h02",
    "scenario_h02_h03",
    "scenario_h03",
    "scenario_power",
]

DEFAULT_LEVELS = (0.05, 0.10)
LRT, WALD = "lrt", "wald"


def replicate_rng(seed: int, k: int) -> np.random.Generator:
    """Independent stream for replicate ``k``; depends only on ``(seed, k)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(k,))))


def sample_graph(theta: Theta, rng: np.random.Generator | int | None = None) -> DirectedGraph:
    """Draw every ordered pair ``i != j`` independently from its edge probability."""
    rng = np.random.default_rng(rng)
    p = mu(theta.logits())
    adj = (rng.random(p.shape) < p).astype(np.int8)
    np.fill_diagonal(adj, 0)
    return DirectedGraph(adj)


@dataclass(frozen=True)
class Scenario:
    n: int
    theta: Theta
    null: NullHypothesis
    label: str

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "label": self.label,
            "alpha": self.theta.alpha.tolist(),
            "beta": self.theta.beta.tolist(),
            "null": self.null.to_dict(),
        }


def _ramp(n: int, L: float) -> np.ndarray:
    return np.arange(n) * L / (n - 1)


def _with_beta(alpha: np.ndarray) -> Theta:
    beta = alpha.copy()
    beta[-1] = 0.0
    return Theta(alpha, beta)


def scenario_h01(n: int, L: float) -> Scenario:
    """``alpha_i = (i-1) L / (n-1)``, ``beta = alpha`` except ``beta_n = 0``;
    the null pins every ``alpha_i`` at its true value."""
    if n < 2:
        raise ValueError("n must be at least 2")
    alpha = _ramp(n, L)
    theta = _with_beta(alpha)
    null = NullHypothesis.specified(range(1, n + 1), alpha)
    return Scenario(n, theta, null, f"H01/n={n}/L={L:.6g}")


def scenario_h02_h03(n: int, r: int, L: float) -> Scenario:
    """``alpha_1..alpha_r = 0`` and the ramp elsewhere; null is their equality."""
    if not 2 <= r <= n:
        raise ValueError(f"r must lie in 2..{n}, got {r}")
    alpha = _ramp(n, L)
    alpha[:r] = 0.0
    theta = _with_beta(alpha)
    null = NullHypothesis.homogeneous(range(1, r + 1))
    return Scenario(n, theta, null, f"homogeneous/n={n}/r={r}/L={L:.6g}")


def scenario_h02(n: int, L: float) -> Scenario:
    sc = scenario_h02_h03(n, n // 2, L)
    return Scenario(sc.n, sc.theta, sc.null, f"H02/n={n}/r={n // 2}/L={L:.6g}")


def scenario_h03(n: int, L: float, r: int = 10) -> Scenario:
    sc = scenario_h02_h03(n, r, L)
    return Scenario(sc.n, sc.theta, sc.null, f"H03/n={n}/r={r}/L={L:.6g}")


def scenario_power(n: int, r: int, c: float) -> Scenario:
    """``alpha_i = i c / r`` for ``i <= r``; ``alpha_i = 0.2 i log(n) / n``
    beyond, ``beta_i = 0.2 i log(n) / n`` with ``beta_n = 0``."""
    if not 2 <= r <= n:
        raise ValueError(f"r must lie in 2..{n}, got {r}")
    if c < 0:
        raise ValueError("c must be non-negative")
    i = np.arange(1, n + 1)
    ramp = 0.2 * i * math.log(n) / n
    alpha = ramp.copy()
    alpha[:r] = i[:r] * c / r
    beta = ramp.copy()
    beta[-1] = 0.0
    null = NullHypothesis.homogeneous(range(1, r + 1))
    return Scenario(n, Theta(alpha, beta), null, f"power/n={n}/r={r}/c={c:.6g}")


@dataclass
class SimulationReport:
    """Per-replicate arrays are indexed by replicate; failed replicates hold NaN
    there and are excluded from :attr:`statistics` and the rejection rates."""

    scenario: Scenario
    test: str
    reference: str
    df: int | None
    replicates: int
    seed: int
    all_statistics: np.ndarray
    all_p_values: np.ndarray
    all_deviances: np.ndarray
    levels: tuple = DEFAULT_LEVELS
    failures: dict = field(default_factory=dict)

    @property
    def ok(self) -> np.ndarray:
        return ~np.isnan(self.all_statistics)

    @property
    def statistics(self) -> np.ndarray:
        return self.all_statistics[self.ok]

    @property
    def p_values(self) -> np.ndarray:
        return self.all_p_values[self.ok]

    @property
    def deviances(self) -> np.ndarray:
        return self.all_deviances[self.ok]

    @property
    def n_failed(self) -> int:
        return int((~self.ok).sum())

    @property
    def rejection_rates(self) -> dict:
        p = self.p_values
        if p.size == 0:
            return {lvl: float("nan") for lvl in self.levels}
        return {lvl: float(np.mean(p < lvl)) for lvl in self.levels}

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario.to_dict(),
            "test": self.test,
            "reference": self.reference,
            "df": self.df,
            "replicates": self.replicates,
            "seed": self.seed,
            "n_failed": self.n_failed,
            "failures": {str(k): v for k, v in sorted(self.failures.items())},
            "rejection_rates": {
                repr(float(k)): (None if np.isnan(v) else v) for k, v in self.rejection_rates.items()
            },
            "statistics": self.statistics.tolist(),
            "p_values": self.p_values.tolist(),
            "deviances": self.deviances.tolist() if self.test == LRT else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# scenario={self.scenario.label}\n")
        buf.write(f"# test={self.test} reference={self.reference} df={self.df}\n")
        buf.write(f"# replicates={self.replicates} seed={self.seed} n_failed={self.n_failed}\n")
        for lvl, rate in self.rejection_rates.items():
            buf.write(f"# rejection_rate[{lvl!r}]={rate!r}\n")
        writer = csv.writer(buf, quoting=csv.QUOTE_NONE, lineterminator="\n")
        writer.writerow(["replicate", "statistic", "p_value"])
        for k in np.flatnonzero(self.ok):
            writer.writerow([int(k), repr(float(self.all_statistics[k])), repr(float(self.all_p_values[k]))])
        return buf.getvalue()


def _one_replicate(scenario: Scenario, test: str, reference: str, seed: int, k: int, eps: float, max_iter: int):
    g = sample_graph(scenario.theta, replicate_rng(seed, k))
    try:
        full = fit_mle(g, eps=eps, max_iter=max_iter)
        if test == WALD:
            res = wald(g, scenario.null.indices, side=scenario.null.side, full=full)
            return res.statistic, res.p_value, math.nan, None
        restricted = fit_null(g, scenario.null, eps=eps, max_iter=max_iter)
    except (DegenerateDegreeError, NonConvergenceError) as exc:
        return math.nan, math.nan, math.nan, type(exc).__name__
    res = lrt_from_fits(full, restricted, scenario.null, reference)
    return res.statistic, res.p_value, res.deviance, None


def _run_chunk(args):
    scenario, test, reference, seed, ks, eps, max_iter = args
    return [(k, *_one_replicate(scenario, test, reference, seed, k, eps, max_iter)) for k in ks]


def monte_carlo(
    scenario: Scenario,
    test: str = LRT,
    ref: str = AUTO,
    replicates: int = 1000,
    seed: int = 0,
    workers: int = 1,
    levels=DEFAULT_LEVELS,
    r_switch: int = DEFAULT_R_SWITCH,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SimulationReport:
    """Simulate ``replicates`` graphs from ``scenario`` and test its null on each.

    Replicate ``k`` draws from :func:`replicate_rng` ``(seed, k)`` and is
    computed in isolation, so the report does not depend on ``workers``.
    Replicates whose fits fail (zero degrees or no convergence) are counted
    in ``failures`` and left out of the rates.
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    if test == WALD:
        if not scenario.null.is_homogeneous:
            raise InvalidReferenceError("the Wald test is defined for homogeneous nulls only")
        reference, df = CHISQ, scenario.null.r - 1
    elif test == LRT:
        reference = resolve_reference(scenario.null, ref, r_switch)
        if reference == NONE:
            raise InvalidReferenceError(
                "this specified null has no chi-square reference; request ref='normal' explicitly"
            )
        df = scenario.null.r - 1 if reference == CHISQ else None
    else:
        raise ValueError(f"unknown test {test!r}")

    ks = list(range(replicates))
    if workers <= 1:
        rows = _run_chunk((scenario, test, reference, seed, ks, eps, max_iter))
    else:
        size = max(1, math.ceil(replicates / (workers * 4)))
        chunks = [ks[i : i + size] for i in range(0, replicates, size)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_run_chunk, [(scenario, test, reference, seed, c, eps, max_iter) for c in chunks])
            rows = [row for part in parts for row in part]

    stats = np.full(replicates, np.nan)
    pvals = np.full(replicates, np.nan)
    devs = np.full(replicates, np.nan)
    failures = {}
    for k, stat, p, dev, err in rows:
        stats[k], pvals[k], devs[k] = stat, p, dev
        if err is not None:
            failures[k] = err
    return SimulationReport(
        scenario, test, reference, df, replicates, seed, stats, pvals, devs, tuple(levels), failures
    )


def _reference_fns(reference: str, df):
    if reference == NORMAL:
        return normal_cdf, normal_ppf
    if reference == CHISQ:
        if df is None or df <= 0:
            raise ValueError("chi-square reference needs positive df")
        return (lambda x: chisq_cdf(max(x, 0.0), df)), (lambda q: chisq_ppf(q, df))
    raise ValueError(f"unknown reference {reference!r}")


def qq_data(statistics, reference: str = NORMAL, df: int | None = None) -> np.ndarray:
    """Pairs ``(theoretical, empirical)`` of quantiles at positions ``(k - 0.5) / m``.

    Returns an ``(m, 2)`` array sorted by position.
    """
    x = np.asarray(statistics, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("qq_data needs at least two statistics")
    if not np.all(np.isfinite(x)):
        raise ValueError("statistics must be finite")
    _, ppf = _reference_fns(reference, df)
    m = x.size
    probs = (np.arange(1, m + 1) - 0.5) / m
    theo = np.array([ppf(q) for q in probs])
    return np.column_stack([theo, np.sort(x)])


def qq_to_csv(pairs: np.ndarray) -> str:
    lines = ["theoretical,empirical"]
    lines.extend(f"{t!r},{e!r}" for t, e in pairs.tolist())
    return "\n".join(lines) + "\n"


def ks_distance(statistics, reference: str = NORMAL, df: int | None = None) -> float:
    """Kolmogorov-Smirnov distance between the sample and the reference CDF."""
    x = np.sort(np.asarray(statistics, dtype=float).ravel())
    m = x.size
    if m == 0:
        raise ValueError("ks_distance needs at least one statistic")
    cdf, _ = _reference_fns(reference, df)
    f = np.array([cdf(v) for v in x])
    upper = np.arange(1, m + 1) / m - f
    lower = f - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))
