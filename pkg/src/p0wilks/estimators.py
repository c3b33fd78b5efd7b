"""scikit-learn style wrappers.

``X`` is either a :class:`~p0wilks.graph.DirectedGraph` or a square 0/1
adjacency matrix. Hyper-parameters live in ``__init__`` untouched so that
``get_params``/``set_params``/``clone`` work; fitted state carries a
trailing underscore.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimation import (
    ALPHA,
    DEFAULT_EPS,
    DEFAULT_MAX_ITER,
    HOMOGENEOUS,
    NullHypothesis,
    fit_mle,
    fit_null,
)
from .graph import DirectedGraph
from .inference import AUTO, DEFAULT_R_SWITCH, lrt, wald
from .model import edge_probs, log_likelihood
from .simulation import sample_graph

__all__ = ["DegreeHeterogeneityTest", "P0Model", "RestrictedP0Model", "check_graph"]


def check_graph(X) -> DirectedGraph:
    """Coerce ``X`` to a :class:`DirectedGraph`, validating adjacency input."""
    if isinstance(X, DirectedGraph):
        return X
    return DirectedGraph(np.asarray(X))


class _ThetaMixin:
    def _set_theta(self, result):
        self.fit_result_ = result
        self.theta_ = result.theta
        self.alpha_ = result.theta.alpha
        self.beta_ = result.theta.beta
        self.loglik_ = result.loglik
        self.n_iter_ = result.iterations
        self.n_nodes_ = result.theta.n

    def predict_proba(self, X=None):
        """Edge-probability matrix under the fitted parameters (zero diagonal)."""
        check_is_fitted(self, "theta_")
        if X is not None and check_graph(X).n != self.n_nodes_:
            raise ValueError(f"expected a graph on {self.n_nodes_} nodes")
        return edge_probs(self.theta_)

    def score(self, X, y=None):
        """Log-likelihood of ``X`` under the fitted parameters."""
        check_is_fitted(self, "theta_")
        return log_likelihood(check_graph(X), self.theta_)

    def sample(self, random_state=None) -> DirectedGraph:
        check_is_fitted(self, "theta_")
        return sample_graph(self.theta_, random_state)


class P0Model(_ThetaMixin, BaseEstimator):
    """Unrestricted maximum-likelihood fit of the p0 model.

    Attributes set by :meth:`fit`: ``alpha_``, ``beta_`` (identified,
    ``beta_[-1] == 0``), ``theta_``, ``loglik_``, ``n_iter_``,
    ``fit_result_``.
    """

    def __init__(self, eps=DEFAULT_EPS, max_iter=DEFAULT_MAX_ITER, init=None):
        self.eps = eps
        self.max_iter = max_iter
        self.init = init

    def fit(self, X, y=None):
        g = check_graph(X)
        self._set_theta(fit_mle(g, eps=self.eps, max_iter=self.max_iter, init=self.init))
        return self


class RestrictedP0Model(_ThetaMixin, BaseEstimator):
    """Maximum-likelihood fit under a homogeneous or specified null."""

    def __init__(
        self,
        indices=(1, 2),
        kind=HOMOGENEOUS,
        values=None,
        side=ALPHA,
        eps=DEFAULT_EPS,
        max_iter=DEFAULT_MAX_ITER,
    ):
        self.indices = indices
        self.kind = kind
        self.values = values
        self.side = side
        self.eps = eps
        self.max_iter = max_iter

    def _null(self) -> NullHypothesis:
        return NullHypothesis(self.kind, tuple(self.indices), None if self.values is None else tuple(self.values), self.side)

    def fit(self, X, y=None):
        g = check_graph(X)
        self._set_theta(fit_null(g, self._null(), eps=self.eps, max_iter=self.max_iter))
        return self


class DegreeHeterogeneityTest(BaseEstimator):
    """Likelihood-ratio or Wald test of a null on the degree parameters.

    After :meth:`fit`, ``result_`` holds the :class:`~p0wilks.inference.TestResult`
    and ``statistic_``/``pvalue_`` mirror it. :meth:`predict` returns whether
    the null is rejected at ``level``.
    """

    def __init__(
        self,
        indices=(1, 2),
        kind=HOMOGENEOUS,
        values=None,
        side=ALPHA,
        test="lrt",
        ref=AUTO,
        r_switch=DEFAULT_R_SWITCH,
        level=0.05,
        eps=DEFAULT_EPS,
        max_iter=DEFAULT_MAX_ITER,
    ):
        self.indices = indices
        self.kind = kind
        self.values = values
        self.side = side
        self.test = test
        self.ref = ref
        self.r_switch = r_switch
        self.level = level
        self.eps = eps
        self.max_iter = max_iter

    def fit(self, X, y=None):
        g = check_graph(X)
        if self.test == "wald":
            if self.kind != HOMOGENEOUS:
                raise ValueError("the Wald test covers homogeneous nulls only")
            res = wald(g, tuple(self.indices), side=self.side, eps=self.eps, max_iter=self.max_iter)
        elif self.test == "lrt":
            null = NullHypothesis(
                self.kind, tuple(self.indices), None if self.values is None else tuple(self.values), self.side
            )
            res = lrt(g, null, ref=self.ref, r_switch=self.r_switch, eps=self.eps, max_iter=self.max_iter)
        else:
            raise ValueError(f"test must be 'lrt' or 'wald', got {self.test!r}")
        self.result_ = res
        self.statistic_ = res.statistic
        self.pvalue_ = res.p_value
        return self

    def predict(self, X=None):
        check_is_fitted(self, "result_")
        if self.pvalue_ is None:
            raise ValueError("no reference distribution for this null; no decision can be made")
        return bool(self.pvalue_ < self.level)
