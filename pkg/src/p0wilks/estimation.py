"""Fixed-point maximum likelihood for the p0 model.

Three solvers share one Jacobi-style sweep:

* :func:`fit_mle`: unrestricted, normalized to ``beta_n = 0`` after every sweep;
* :func:`fit_restricted_homogeneous`: ``alpha_i`` equal on an index set,
  updated jointly from the pooled out-degree;
* :func:`fit_restricted_specified`: ``alpha_i`` pinned on an index set,
  ``beta_n`` free by default (``identified=True`` holds it at 0).

Hypotheses on ``beta`` are fitted by running the ``alpha`` solver on the
transposed graph, which swaps the roles of the two parameter families.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .exceptions import DegenerateDegreeError, InvalidNullError, NonConvergenceError
from .graph import DirectedGraph, transpose
from .model import Theta, log_likelihood, mu

__all__ = [
    "DEFAULT_EPS",
    "DEFAULT_MAX_ITER",
    "ExistenceReport",
    "FitResult",
    "NullHypothesis",
    "check_existence",
    "fit_mle",
    "fit_null",
    "fit_restricted_homogeneous",
    "fit_restricted_specified",
]

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-8
DEFAULT_MAX_ITER = 5000

ALPHA, BETA = "alpha", "beta"
HOMOGENEOUS, SPECIFIED = "homogeneous", "specified"


@dataclass(frozen=True)
class NullHypothesis:
    """Constraint on one parameter family.

    ``indices`` are 1-based node labels. For ``kind="specified"`` the
    matching ``values`` pin each parameter; for ``kind="homogeneous"`` the
    parameters are only required to be equal.
    """

    kind: str
    indices: tuple
    values: tuple | None = None
    side: str = ALPHA

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if self.values is not None:
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.side not in (ALPHA, BETA):
            raise InvalidNullError(f"side must be 'alpha' or 'beta', got {self.side!r}")
        if len(set(idx)) != len(idx):
            raise InvalidNullError("null indices must be distinct")
        if self.kind == HOMOGENEOUS:
            if len(idx) < 2:
                raise InvalidNullError("a homogeneous null needs at least two indices")
            if self.values is not None:
                raise InvalidNullError("a homogeneous null takes no values")
        elif self.kind == SPECIFIED:
            if len(idx) < 1:
                raise InvalidNullError("a specified null needs at least one index")
            if self.values is None or len(self.values) != len(idx):
                raise InvalidNullError("a specified null needs one value per index")
        else:
            raise InvalidNullError(f"unknown null kind {self.kind!r}")

    @classmethod
    def homogeneous(cls, indices: Sequence[int], side: str = ALPHA) -> "NullHypothesis":
        return cls(HOMOGENEOUS, tuple(indices), None, side)

    @classmethod
    def specified(cls, indices: Sequence[int], values: Sequence[float], side: str = ALPHA) -> "NullHypothesis":
        return cls(SPECIFIED, tuple(indices), tuple(values), side)

    @property
    def r(self) -> int:
        return len(self.indices)

    @property
    def is_homogeneous(self) -> bool:
        return self.kind == HOMOGENEOUS

    def validate(self, n: int) -> None:
        bad = [i for i in self.indices if not 1 <= i <= n]
        if bad:
            raise InvalidNullError(f"null indices {bad} outside 1..{n}")
        if self.side == BETA and n in self.indices:
            raise InvalidNullError(f"beta_{n} is fixed at 0 for identification and cannot be constrained")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "side": self.side, "indices": list(self.indices)}
        if self.values is not None:
            out["values"] = list(self.values)
        return out


@dataclass
class FitResult:
    theta: Theta
    loglik: float
    iterations: int
    converged: bool
    max_rel_dev: float
    null: NullHypothesis | None = None

    def to_dict(self) -> dict:
        return {
            "alpha": self.theta.alpha.tolist(),
            "beta": self.theta.beta.tolist(),
            "identified": self.theta.identified,
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "max_rel_dev": self.max_rel_dev,
            "null": None if self.null is None else self.null.to_dict(),
        }


def _probs(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    p = mu(alpha[:, None] + beta[None, :])
    np.fill_diagonal(p, 0.0)
    return p


def _fixed_point(
    d: np.ndarray,
    b: np.ndarray,
    alpha: np.ndarray,
    beta: np.ndarray,
    *,
    pooled: np.ndarray | None,
    fixed: np.ndarray | None,
    normalize: bool,
    fixed_beta: np.ndarray | None = None,
    eps: float,
    max_iter: int,
):
    """Iterate the likelihood-equation map until the relative degree
    residuals drop below ``eps``. Returns ``(alpha, beta, iterations,
    converged, max_rel_dev)``.

    Each coordinate is updated from the previous sweep only. The update
    ``log d_i - log sum_j e^{beta_j} / (1 + e^{alpha_i + beta_j})`` is
    evaluated as ``alpha_i + log d_i - log sum_j p_ij`` so one matrix of
    probabilities serves both the update and the convergence check.
    """
    n = d.size
    free = np.ones(n, dtype=bool)
    if pooled is not None:
        free &= ~pooled
    if fixed is not None:
        free &= ~fixed
    free_b = np.ones(n, dtype=bool) if fixed_beta is None else ~fixed_beta
    log_d = np.log(d, where=free, out=np.zeros(n))
    log_b = np.log(b, where=free_b, out=np.zeros(n))
    if pooled is not None:
        log_pooled_d = np.log(d[pooled].sum())

    p = _probs(alpha, beta)
    dev = np.inf
    it = 0
    while it < max_iter:
        rows = p.sum(axis=1)
        cols = p.sum(axis=0)
        new_alpha = alpha.copy()
        new_alpha[free] += log_d[free] - np.log(rows[free])
        if pooled is not None:
            # alpha is equal across the pooled set, so one shared step
            new_alpha[pooled] += log_pooled_d - np.log(rows[pooled].sum())
        new_beta = beta.copy()
        new_beta[free_b] += log_b[free_b] - np.log(cols[free_b])
        if normalize:
            shift = new_beta[-1]
            new_alpha += shift
            new_beta -= shift
        it += 1
        if not (np.all(np.isfinite(new_alpha)) and np.all(np.isfinite(new_beta))):
            break
        alpha, beta = new_alpha, new_beta
        p = _probs(alpha, beta)
        y = p.sum(axis=1)[free] / d[free]
        z = p.sum(axis=0)[free_b] / b[free_b]
        dev = float(max(np.abs(y - 1.0).max(initial=0.0), np.abs(z - 1.0).max(initial=0.0)))
        if dev < eps:
            return alpha, beta, it, True, dev
    return alpha, beta, it, False, dev


def _degenerate(d, b, skip=None, pooled=None, skip_in=None) -> list:
    bad = []
    for i in np.flatnonzero(d == 0):
        if skip is not None and skip[i]:
            continue
        if pooled is not None and pooled[i]:
            continue
        bad.append(("out", int(i) + 1))
    if pooled is not None and d[pooled].sum() == 0:
        bad.append(("pooled", [int(i) + 1 for i in np.flatnonzero(pooled)]))
    bad.extend(
        ("in", int(j) + 1) for j in np.flatnonzero(b == 0) if skip_in is None or not skip_in[j]
    )
    return bad


def _swap_kinds(nodes: list) -> list:
    swap = {"out": "in", "in": "out", "pooled": "pooled"}
    return [(swap[k], v) for k, v in nodes]


def _initial(n: int, init: Theta | None) -> tuple[np.ndarray, np.ndarray]:
    if init is None:
        return np.zeros(n), np.zeros(n)
    if init.n != n:
        raise ValueError(f"init has {init.n} nodes, graph has {n}")
    return init.alpha.astype(float).copy(), init.beta.astype(float).copy()


def _finish(g, alpha, beta, it, converged, dev, identified, null) -> FitResult:
    theta = Theta(alpha, beta, identified=False)
    if identified:
        theta = theta.normalized()
    result = FitResult(theta, log_likelihood(g, theta), it, converged, dev, null)
    logger.debug("fit finished: %d iterations, converged=%s, dev=%.3g", it, converged, dev)
    if not converged:
        raise NonConvergenceError(result)
    return result


def fit_mle(
    g: DirectedGraph,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    init: Theta | None = None,
) -> FitResult:
    """Unrestricted MLE, returned in identified form (``beta_n = 0``)."""
    d, b = g.out_deg, g.in_deg
    bad = _degenerate(d, b)
    if bad:
        raise DegenerateDegreeError(bad)
    alpha, beta = _initial(g.n, init)
    out = _fixed_point(d, b, alpha, beta, pooled=None, fixed=None, normalize=True, eps=eps, max_iter=max_iter)
    return _finish(g, *out, identified=True, null=None)


def _mask(n: int, indices) -> np.ndarray:
    m = np.zeros(n, dtype=bool)
    m[np.asarray(indices, dtype=int) - 1] = True
    return m


def fit_restricted_homogeneous(
    g: DirectedGraph,
    null: NullHypothesis,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    init: Theta | None = None,
) -> FitResult:
    """MLE under ``theta_i`` equal for every ``i`` in ``null.indices``.

    The solver does not normalize between sweeps; the result is translated
    to ``beta_n = 0`` afterwards, which leaves the likelihood unchanged.
    """
    if not null.is_homogeneous:
        raise InvalidNullError("fit_restricted_homogeneous needs a homogeneous null")
    null.validate(g.n)
    work = transpose(g) if null.side == BETA else g
    if init is not None and null.side == BETA:
        init = Theta(init.beta, init.alpha, identified=False)
    d, b = work.out_deg, work.in_deg
    pooled = _mask(g.n, null.indices)
    bad = _degenerate(d, b, pooled=pooled)
    if bad:
        raise DegenerateDegreeError(_swap_kinds(bad) if null.side == BETA else bad)
    alpha, beta = _initial(g.n, init)
    alpha[pooled] = alpha[pooled].mean()
    alpha, beta, it, conv, dev = _fixed_point(
        d, b, alpha, beta, pooled=pooled, fixed=None, normalize=False, eps=eps, max_iter=max_iter
    )
    if null.side == BETA:
        alpha, beta = beta, alpha
    return _finish(g, alpha, beta, it, conv, dev, identified=True, null=null)


def fit_restricted_specified(
    g: DirectedGraph,
    null: NullHypothesis,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    init: Theta | None = None,
    identified: bool = False,
) -> FitResult:
    """MLE with the parameters in ``null.indices`` pinned to ``null.values``.

    By default every other parameter, ``beta_n`` included, is free and the
    returned ``Theta`` is not identified. A translation then absorbs one
    pinned value, so the null removes ``r - 1`` parameters from the full
    model; this is the convention the type-I error calibration matches.
    ``identified=True`` also holds ``beta_n = 0`` and removes exactly ``r``.
    """
    if null.is_homogeneous:
        raise InvalidNullError("fit_restricted_specified needs a specified null")
    null.validate(g.n)
    work = transpose(g) if null.side == BETA else g
    if init is not None and null.side == BETA:
        init = Theta(init.beta, init.alpha, identified=False)
    d, b = work.out_deg, work.in_deg
    n = g.n
    fixed = _mask(n, null.indices)
    fixed_beta = np.zeros(n, dtype=bool)
    if identified and null.side == BETA:
        # beta_n = 0 becomes alpha_n = 0 on the transposed graph
        fixed[n - 1] = True
    elif identified:
        fixed_beta[n - 1] = True
    # with beta_n free, a translation can push the pinned nodes' rows to zero
    bad = _degenerate(d, b, skip=fixed, pooled=None if identified else fixed, skip_in=fixed_beta)
    if bad:
        raise DegenerateDegreeError(_swap_kinds(bad) if null.side == BETA else bad)
    alpha, beta = _initial(n, init)
    alpha[np.asarray(null.indices) - 1] = null.values
    alpha[fixed & ~_mask(n, null.indices)] = 0.0
    beta[fixed_beta] = 0.0
    alpha, beta, it, conv, dev = _fixed_point(
        d, b, alpha, beta, pooled=None, fixed=fixed, fixed_beta=fixed_beta, normalize=False, eps=eps, max_iter=max_iter
    )
    if null.side == BETA:
        alpha, beta = beta, alpha
    return _finish(g, alpha, beta, it, conv, dev, identified=identified, null=null)


def fit_null(g: DirectedGraph, null: NullHypothesis, **opts) -> FitResult:
    if null.is_homogeneous:
        return fit_restricted_homogeneous(g, null, **opts)
    return fit_restricted_specified(g, null, **opts)


@dataclass
class ExistenceReport:
    """Boundary degrees that usually mean the MLE does not exist.

    Node lists are 1-based. ``pooled_zero`` is set when every node named by
    the active null has zero degree on the constrained side.
    """

    zero_out: list = field(default_factory=list)
    full_out: list = field(default_factory=list)
    zero_in: list = field(default_factory=list)
    full_in: list = field(default_factory=list)
    pooled_zero: bool = False

    @property
    def ok(self) -> bool:
        return not (self.zero_out or self.full_out or self.zero_in or self.full_in or self.pooled_zero)

    @property
    def flagged(self) -> set:
        return set(self.zero_out) | set(self.full_out) | set(self.zero_in) | set(self.full_in)

    def messages(self) -> list[str]:
        msgs = []
        for name, nodes in (
            ("zero out-degree", self.zero_out),
            ("out-degree n-1", self.full_out),
            ("zero in-degree", self.zero_in),
            ("in-degree n-1", self.full_in),
        ):
            if nodes:
                msgs.append(f"{len(nodes)} node(s) with {name}: {nodes[:20]}")
        if self.pooled_zero:
            msgs.append("total degree of the null index set is zero")
        if msgs:
            msgs.append("boundary degrees typically mean the MLE does not exist")
        return msgs

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "zero_out": self.zero_out,
            "full_out": self.full_out,
            "zero_in": self.zero_in,
            "full_in": self.full_in,
            "pooled_zero": self.pooled_zero,
            "messages": self.messages(),
        }


def check_existence(g: DirectedGraph, null: NullHypothesis | None = None) -> ExistenceReport:
    d, b, n = g.out_deg, g.in_deg, g.n
    report = ExistenceReport(
        zero_out=[int(i) + 1 for i in np.flatnonzero(d == 0)],
        full_out=[int(i) + 1 for i in np.flatnonzero(d == n - 1)],
        zero_in=[int(j) + 1 for j in np.flatnonzero(b == 0)],
        full_in=[int(j) + 1 for j in np.flatnonzero(b == n - 1)],
    )
    if null is not None:
        deg = d if null.side == ALPHA else b
        report.pooled_zero = bool(deg[np.asarray(null.indices) - 1].sum() == 0)
    return report
