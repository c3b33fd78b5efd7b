import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import random_interior_graph
from p0wilks import NullHypothesis, Theta, fit_mle, lrt, wald
from p0wilks.exceptions import InvalidNullError, InvalidReferenceError
from p0wilks.estimation import FitResult
from p0wilks.inference import (
    chisq_cdf,
    chisq_ppf,
    chisq_sf,
    lrt_from_fits,
    normal_cdf,
    normal_ppf,
    normal_sf,
    regularized_gamma,
    resolve_reference,
    wald_statistic,
)


class TestNormal:
    def test_values(self):
        assert normal_cdf(0.0) == 0.5
        assert normal_cdf(1.959964) == pytest.approx(0.975, abs=1e-6)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-38, 38))
    def test_against_scipy(self, x):
        assert normal_cdf(x) + normal_cdf(-x) == pytest.approx(1.0, abs=1e-15)
        assert abs(normal_cdf(x) - stats.norm.cdf(x)) < 1e-12
        assert abs(normal_sf(x) - stats.norm.sf(x)) <= 1e-12 * max(stats.norm.sf(x), 1e-300) + 1e-300

    def test_ppf(self):
        for q in (0.001, 0.05, 0.5, 0.975, 0.999):
            assert normal_ppf(q) == pytest.approx(stats.norm.ppf(q), abs=1e-9)


class TestChiSquare:
    def test_zero(self):
        for df in (1, 2, 7, 50):
            assert chisq_cdf(0.0, df) == 0.0
            assert chisq_sf(0.0, df) == 1.0

    def test_df2_closed_form(self):
        assert chisq_cdf(2.0, 2) == pytest.approx(1 - math.exp(-1), abs=1e-14)

    def test_critical_value(self):
        assert chisq_cdf(3.841459, 1) == pytest.approx(0.95, abs=1e-6)

    def test_negative(self):
        with pytest.raises(ValueError):
            chisq_cdf(-1.0, 3)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(0, 400), st.integers(1, 150))
    def test_against_scipy(self, x, df):
        assert abs(chisq_cdf(x, df) - stats.chi2.cdf(x, df)) < 1e-10
        assert abs(chisq_sf(x, df) - stats.chi2.sf(x, df)) < 1e-10

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.5, 60), st.floats(0, 120))
    def test_regularized_gamma(self, a, x):
        p, q = regularized_gamma(a, x)
        assert p + q == pytest.approx(1.0, abs=1e-12)
        assert abs(p - stats.gamma.cdf(x, a)) < 1e-10

    def test_ppf(self):
        for df in (1, 4, 9, 30):
            for q in (0.05, 0.5, 0.95):
                assert chisq_ppf(q, df) == pytest.approx(stats.chi2.ppf(q, df), abs=1e-8)


class TestReference:
    def test_auto(self):
        small_h = NullHypothesis.homogeneous(range(1, 6))
        big_h = NullHypothesis.homogeneous(range(1, 41))
        small_s = NullHypothesis.specified([1], [0.0])
        big_s = NullHypothesis.specified(range(1, 41), [0.0] * 40)
        assert resolve_reference(small_h) == "chisq"
        assert resolve_reference(big_h) == "normal"
        assert resolve_reference(small_s) == "none"
        assert resolve_reference(big_s) == "normal"
        assert resolve_reference(big_h, r_switch=50) == "chisq"

    def test_chisq_refused_for_specified(self):
        with pytest.raises(InvalidReferenceError, match="no chi-square reference"):
            resolve_reference(NullHypothesis.specified([1], [0.0]), "chisq")

    def test_unknown(self):
        with pytest.raises(InvalidReferenceError):
            resolve_reference(NullHypothesis.homogeneous([1, 2]), "t")


class TestLRT:
    def test_cycle(self, cycle3):
        res = lrt(cycle3, NullHypothesis.homogeneous([1, 2, 3]), ref="chisq")
        assert res.statistic == pytest.approx(0.0, abs=1e-9)
        assert res.df == 2
        assert res.p_value == pytest.approx(1.0)
        assert res.method == "lrt_chisq"

    def test_specified_no_reference(self, cycle3):
        res = lrt(cycle3, NullHypothesis.specified([1], [0.5]))
        assert res.reference == "none" and res.p_value is None
        with pytest.raises(InvalidReferenceError):
            lrt(cycle3, NullHypothesis.specified([1], [0.5]), ref="chisq")

    def test_scale_consistency(self):
        g = random_interior_graph(np.random.default_rng(31), 30)
        null = NullHypothesis.homogeneous(range(1, 11))
        chi = lrt(g, null, ref="chisq")
        nor = lrt(g, null, ref="normal", full=chi.full_fit)
        r = null.r
        assert nor.statistic * math.sqrt(2 * r) + r == pytest.approx(chi.statistic, abs=1e-10)
        assert chi.statistic >= -1e-9
        assert chi.p_value == pytest.approx(chisq_sf(chi.statistic, r - 1), abs=1e-10)
        assert nor.p_value == pytest.approx(normal_sf(nor.statistic), abs=1e-10)

    def test_beta_side(self):
        g = random_interior_graph(np.random.default_rng(32), 15)
        res = lrt(g, NullHypothesis.homogeneous([11, 12, 13, 14], side="beta"))
        assert res.df == 3 and 0.0 <= res.p_value <= 1.0

    def test_to_dict(self, cycle3):
        d = lrt(cycle3, NullHypothesis.homogeneous([1, 2])).to_dict()
        assert d["null"] == {"kind": "homogeneous", "side": "alpha", "indices": [1, 2]}
        assert d["full_fit"]["converged"]

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 100), st.floats(1e-3, 10), st.integers(2, 60))
    def test_p_monotone(self, s, delta, r):
        def pvals(dev):
            fake = FitResult(Theta.zeros(2), 0.0, 1, True, 0.0)
            restricted = FitResult(Theta.zeros(2), -dev / 2, 1, True, 0.0)
            null = NullHypothesis.homogeneous(range(1, r + 1))
            return [lrt_from_fits(fake, restricted, null, ref).p_value for ref in ("chisq", "normal")]

        lo, hi = pvals(s), pvals(s + delta)
        assert hi[0] <= lo[0] and hi[1] <= lo[1]
        assert hi[1] < lo[1] or lo[1] == 0.0


class TestWald:
    def test_cycle(self, cycle3):
        res = wald(cycle3, [1, 2])
        assert res.statistic == pytest.approx(0.0, abs=1e-12)
        assert res.p_value == pytest.approx(1.0)

    def test_r2_reduction(self):
        g = random_interior_graph(np.random.default_rng(33), 12)
        full = fit_mle(g)
        res = wald(g, [3, 7], full=full)
        th = full.theta
        p = 1 / (1 + np.exp(-th.logits()))
        w = p * (1 - p)
        np.fill_diagonal(w, 0.0)
        v = w.sum(axis=1)
        expected = (th.alpha[2] - th.alpha[6]) ** 2 / (1 / v[2] + 1 / v[6])
        assert res.statistic == pytest.approx(expected, rel=1e-12)

    def test_matches_generic_contrast(self):
        # consecutive differences with their exact covariance under diag(1/v)
        rng = np.random.default_rng(34)
        est, v = rng.normal(size=6), rng.uniform(1, 5, 6)
        C = np.zeros((5, 6))
        C[np.arange(5), np.arange(5)] = 1
        C[np.arange(5), np.arange(1, 6)] = -1
        cov = C @ np.diag(1 / v) @ C.T
        diffs = C @ est
        assert wald_statistic(est, v) == pytest.approx(diffs @ np.linalg.solve(cov, diffs), rel=1e-12)

    def test_translation_invariance(self):
        g = random_interior_graph(np.random.default_rng(35), 10)
        full = fit_mle(g)
        shifted = FitResult(full.theta.shifted(2.5), full.loglik, full.iterations, True, full.max_rel_dev)
        for side, idx in (("alpha", [1, 4, 9]), ("beta", [2, 3, 5])):
            a = wald(g, idx, side=side, full=full).statistic
            b = wald(g, idx, side=side, full=shifted).statistic
            assert a == pytest.approx(b, rel=1e-10)

    def test_needs_two(self, cycle3):
        with pytest.raises(InvalidNullError):
            wald(cycle3, [1])
