"""Likelihood, score and Fisher information of the p0 model.

Edge ``i -> j`` is Bernoulli with logit ``alpha[i] + beta[j]``. The free
parameter vector is ``(alpha_1..alpha_n, beta_1..beta_{n-1})``; ``beta_n``
is pinned at zero when a :class:`Theta` is *identified*.

Indices in this module are 0-based: node ``k`` of the user-facing 1..n labels is
row ``k - 1``. Position ``n + j`` of a vector of length ``2n - 1`` holds
``beta[j]`` for ``j < n - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidSizeError, SelfLoopError, SingularInformationError
from .graph import DirectedGraph

__all__ = [
    "FisherInfo",
    "Theta",
    "approx_inverse_S",
    "approx_inverse_S22",
    "approx_inverse_S_tilde",
    "conditioning",
    "edge_prob",
    "fisher_info",
    "log_likelihood",
    "mu",
    "mu_prime",
    "pooled_fisher_info",
    "score",
    "softplus",
]


@dataclass(frozen=True, eq=False)
class Theta:
    alpha: np.ndarray
    beta: np.ndarray
    identified: bool = True

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float)
        beta = np.array(self.beta, dtype=float)
        if alpha.ndim != 1 or alpha.shape != beta.shape:
            raise ValueError("alpha and beta must be 1-d arrays of equal length")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(beta))):
            raise ValueError("parameters must be finite")
        if self.identified and beta.size and beta[-1] != 0.0:
            raise ValueError("identified Theta requires beta[n] == 0")
        alpha.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @classmethod
    def zeros(cls, n: int) -> "Theta":
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def from_vector(cls, vec) -> "Theta":
        """Inverse of :meth:`vector` for a length ``2n - 1`` vector."""
        vec = np.asarray(vec, dtype=float)
        if vec.ndim != 1 or vec.size % 2 != 1:
            raise ValueError("expected a vector of odd length 2n - 1")
        n = (vec.size + 1) // 2
        return cls(vec[:n], np.append(vec[n:], 0.0))

    @property
    def n(self) -> int:
        return self.alpha.size

    def vector(self) -> np.ndarray:
        """Free coordinates ``(alpha, beta[:-1])`` of the identified form."""
        t = self if self.identified else self.normalized()
        return np.concatenate([t.alpha, t.beta[:-1]])

    def normalized(self) -> "Theta":
        """Translate to ``beta[n] == 0``; the distribution is unchanged."""
        c = self.beta[-1]
        return Theta(self.alpha + c, self.beta - c, identified=True)

    def shifted(self, c: float) -> "Theta":
        """``(alpha - c, beta + c)``, which describes the same distribution."""
        return Theta(self.alpha - c, self.beta + c, identified=False)

    def logits(self) -> np.ndarray:
        return self.alpha[:, None] + self.beta[None, :]

    def allclose(self, other: "Theta", atol: float = 1e-8) -> bool:
        return bool(
            np.allclose(self.alpha, other.alpha, rtol=0, atol=atol)
            and np.allclose(self.beta, other.beta, rtol=0, atol=atol)
        )

    def __eq__(self, other):
        if not isinstance(other, Theta):
            return NotImplemented
        return (
            self.identified == other.identified
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.beta, other.beta)
        )

    def __repr__(self):
        return f"Theta(n={self.n}, identified={self.identified})"


@dataclass(frozen=True, eq=False)
class FisherInfo:
    """Fisher information of the identified parameter vector.

    ``v`` is the ``(2n-1) x (2n-1)`` matrix; ``beta_n_col[i]`` is the
    covariance term between ``d_i`` and the dropped ``b_n`` and ``v_2n`` is
    its sum, the variance of ``b_n``.
    """

    v: np.ndarray
    beta_n_col: np.ndarray

    @property
    def n(self) -> int:
        return (self.v.shape[0] + 1) // 2

    @property
    def dim(self) -> int:
        return self.v.shape[0]

    @property
    def v_2n(self) -> float:
        return float(self.beta_n_col.sum())


def mu(x):
    """Logistic function ``e^x / (1 + e^x)``, accurate in both tails."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return out[()] if out.ndim == 0 else out


def mu_prime(x):
    x = np.asarray(x, dtype=float)
    e = np.exp(-np.abs(x))
    out = e / (1.0 + e) ** 2
    return out[()] if out.ndim == 0 else out


def softplus(x):
    """``log(1 + e^x)`` without overflow."""
    x = np.asarray(x, dtype=float)
    out = np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))
    return out[()] if out.ndim == 0 else out


def _check_dims(g: DirectedGraph, theta: Theta):
    if g.n != theta.n:
        raise ValueError(f"graph has {g.n} nodes but theta has {theta.n}")


def _offdiag(n: int) -> np.ndarray:
    return ~np.eye(n, dtype=bool)


def edge_prob(theta: Theta, i: int, j: int) -> float:
    """Probability of the edge ``i -> j`` (1-based node labels)."""
    if i == j:
        raise SelfLoopError(f"no self-loops: i == j == {i}")
    return float(mu(theta.alpha[i - 1] + theta.beta[j - 1]))


def edge_probs(theta: Theta) -> np.ndarray:
    """Matrix of edge probabilities with a zero diagonal."""
    p = mu(theta.logits())
    np.fill_diagonal(p, 0.0)
    return p


def log_likelihood(g: DirectedGraph, theta: Theta) -> float:
    """Log-likelihood of ``g``.

    The ``beta[n] * b_n`` term is always included; it vanishes for an
    identified ``theta`` and is needed when ``beta[n]`` is free.
    """
    _check_dims(g, theta)
    d, b = g.out_deg, g.in_deg
    sp = softplus(theta.logits())
    np.fill_diagonal(sp, 0.0)
    return float(theta.alpha @ d + theta.beta @ b - sp.sum())


def score(g: DirectedGraph, theta: Theta) -> np.ndarray:
    """Gradient of the log-likelihood in the ``2n - 1`` free coordinates."""
    _check_dims(g, theta)
    p = edge_probs(theta)
    return np.concatenate([g.out_deg - p.sum(axis=1), (g.in_deg - p.sum(axis=0))[:-1]])


def fisher_info(theta: Theta) -> FisherInfo:
    n = theta.n
    if n < 2:
        raise InvalidSizeError("Fisher information needs n >= 2")
    w = mu_prime(theta.logits())
    np.fill_diagonal(w, 0.0)
    v = np.zeros((2 * n - 1, 2 * n - 1))
    idx_a = np.arange(n)
    idx_b = np.arange(n, 2 * n - 1)
    v[idx_a, idx_a] = w.sum(axis=1)
    v[idx_b, idx_b] = w.sum(axis=0)[:-1]
    v[:n, n:] = w[:, :-1]
    v[n:, :n] = w[:, :-1].T
    return FisherInfo(v=v, beta_n_col=w[:, -1].copy())


def conditioning(theta: Theta) -> tuple[float, float]:
    """Return ``(b_n, c_n)``: max and min of ``1 / mu'(alpha_i + beta_j)``
    over ``i != j``. Both are at least 4."""
    if theta.n < 2:
        raise InvalidSizeError("conditioning needs n >= 2")
    x = theta.logits()[_offdiag(theta.n)]
    inv_var = 2.0 + 2.0 * np.cosh(x)
    return float(inv_var.max()), float(inv_var.min())


def _structured_inverse(diag: np.ndarray, n_alpha: int, corner: float) -> np.ndarray:
    # diag(1/diag) + (+1 on alpha/alpha and beta/beta blocks, -1 across) / corner
    if np.any(diag <= 0) or corner <= 0:
        raise SingularInformationError("approximate inverse needs positive diagonal information")
    sign = np.ones(diag.size)
    sign[n_alpha:] = -1.0
    s = np.outer(sign, sign) / corner
    s[np.diag_indices_from(s)] += 1.0 / diag
    return s


def approx_inverse_S(info: FisherInfo) -> np.ndarray:
    """Closed-form approximation of ``V^{-1}``."""
    return _structured_inverse(np.diag(info.v).copy(), info.n, info.v_2n)


def _check_r(r: int, lo: int, n: int):
    if not (lo <= r <= n - 1):
        raise ValueError(f"r must lie in {lo}..{n - 1}, got {r}")


def pooled_fisher_info(info: FisherInfo, r: int) -> np.ndarray:
    """Information of ``(alpha_pooled, alpha_{r+1..n}, beta_1..beta_{n-1})``
    under the restriction ``alpha_1 = ... = alpha_r``."""
    n = info.n
    _check_r(r, 1, n)
    jac = np.zeros((2 * n - 1, 2 * n - r))
    jac[:r, 0] = 1.0
    jac[r:, 1:] = np.eye(2 * n - 1 - r)
    return jac.T @ info.v @ jac


def approx_inverse_S_tilde(info: FisherInfo, r: int) -> np.ndarray:
    """Closed-form approximation of the inverse of :func:`pooled_fisher_info`."""
    n = info.n
    _check_r(r, 1, n)
    diag_v = np.diag(info.v)
    diag = np.concatenate([[diag_v[:r].sum()], diag_v[r:]])
    return _structured_inverse(diag, n - r + 1, info.v_2n)


def s22_corner(info: FisherInfo, r: int) -> float:
    """Variance mass the ``V_22`` block loses to the dropped rows, i.e. the
    ``beta_n`` column over ``alpha_{r+1..n}`` plus the ``beta``/``alpha_{1..r}``
    cross terms."""
    n = info.n
    return float(info.beta_n_col[r:].sum() + info.v[n:, :r].sum())


def approx_inverse_S22(info: FisherInfo, r: int) -> np.ndarray:
    """Closed-form approximation of the inverse of the lower-right block
    ``V[r:, r:]`` that remains once ``alpha_1..alpha_r`` are fixed."""
    n = info.n
    _check_r(r, 0, n)
    diag = np.diag(info.v)[r:].copy()
    return _structured_inverse(diag, n - r, s22_corner(info, r))
