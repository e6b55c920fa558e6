import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slackmin.bounds import (BoundParams, cdf_uniform_difference,
                             compute_k_tilde, concentration_bound,
                             empirical_eta, expected_eta, lambda_t, pt_bound,
                             regret_bound, theoretical_B)
from slackmin.game import GameConfig


@pytest.fixture
def n5_params(n5_config):
    return BoundParams.from_config(n5_config)


class TestKTilde:
    def test_smallest_valid_horizon_for_unit_rate(self):
        assert compute_k_tilde(1.0) == 2

    def test_smallest_valid_horizon_for_double_rate(self):
        assert compute_k_tilde(2.0) == 14

    def test_defining_inequality_is_tight(self):
        for k in (1.0, 1.5, 2.0, 3.0):
            kt = compute_k_tilde(k)
            assert k * math.sqrt(math.log(2 * kt)) < math.sqrt(kt)
            if kt > 2:  # kt - 1 must have failed the test
                assert k * math.sqrt(math.log(2 * (kt - 1))) >= math.sqrt(kt - 1)

    def test_rejects_rates_below_one(self):
        with pytest.raises(ValueError):
            compute_k_tilde(0.5)


class TestPtBound:
    def test_value(self):
        assert pt_bound(1.0, 4) == pytest.approx(
            math.sqrt(math.log(8.0)) / 2.0)

    def test_domain_starts_at_k_tilde(self):
        with pytest.raises(ValueError):
            pt_bound(2.0, 13)
        assert pt_bound(2.0, 14) > 0


class TestTheoreticalB:
    def test_benchmark_value(self):
        # transcribed independently of the implementation
        k, n, gamma = 1.0, 5, 10.0
        kt = compute_k_tilde(k)
        depletion = 1.0 - k * math.sqrt(math.log(2 * kt)) / math.sqrt(kt)
        want = (3 * k * (3 * 70.0 + gamma) ** n * (32 * n) ** (1 / 6)
                / depletion)
        got = theoretical_B(k, kt, -20.0, 50.0, gamma, n)
        assert got == pytest.approx(want, rel=1e-12)
        assert got == pytest.approx(2.151368e13, rel=1e-6)

    def test_rejects_vanishing_denominator(self):
        # k sqrt(log 2 kt) / sqrt(kt) >= 1 would flip the sign
        with pytest.raises(ValueError):
            theoretical_B(2.0, 2, -20.0, 50.0, 10.0, 5)


class TestBoundParams:
    def test_from_config(self, n5_params):
        assert n5_params.k == 1.0 and n5_params.k_tilde == 2
        assert n5_params.n == 5 and n5_params.w == 0.2
        assert n5_params.alpha == 1.0 and n5_params.beta == 1.0

    def test_invalid_combinations_rejected(self, n5_params):
        with pytest.raises(ValueError):
            dataclasses.replace(n5_params, n=1)
        with pytest.raises(ValueError):
            dataclasses.replace(n5_params, gamma=0.0)
        with pytest.raises(ValueError):
            dataclasses.replace(n5_params, w=0.3)
        with pytest.raises(ValueError):
            dataclasses.replace(n5_params, k_tilde=1)


class TestExpectedEta:
    def test_small_horizon_by_hand(self, n5_params):
        # exploration starts at tau = max(k_tilde, n+1) = 6; eps capped at 1
        want = sum(min(1.0, 5.0 / tau ** 0.3) for tau in range(6, 10))
        assert expected_eta(n5_params, 10) == pytest.approx(want, rel=1e-12)

    def test_benchmark_horizon_pinned(self, n5_params):
        assert expected_eta(n5_params, 1000) == pytest.approx(
            801.8118198849342, rel=1e-12)

    def test_no_steps_before_start(self, n5_params):
        assert expected_eta(n5_params, 6) == 0.0


class TestEmpiricalEta:
    def test_counts_window(self):
        flags = [True, False, True, True, False, True]
        # k_tilde=2, t=6 counts steps 2..5 -> indices 1..4
        assert empirical_eta(np.array(flags), 2, 6) == 2

    def test_short_trace_rejected(self):
        with pytest.raises(ValueError, match="steps"):
            empirical_eta(np.array([True]), 2, 6)

    def test_window_before_k_tilde_is_empty(self):
        assert empirical_eta(np.array([True, True, True]), 4, 3) == 0


class TestLambdaAndConcentration:
    def test_lambda_formula_transcription(self, n5_params):
        t = 1000
        eta = expected_eta(n5_params, t)
        p = n5_params
        depletion = 1.0 - p.k * math.sqrt(math.log(2 * p.k_tilde)) / math.sqrt(p.k_tilde)
        buffer_term = (4 * p.alpha * depletion ** 2 / 27) * p.beta ** 3 * eta
        drift = 3 * p.k * (3 * 70.0 + p.gamma) * math.sqrt(t * math.log(2 * t))
        assert lambda_t(p, eta, t) == pytest.approx(buffer_term - drift,
                                                    rel=1e-12)

    def test_concentration_benchmark_pinned(self, n5_params):
        t = 1000
        lam = lambda_t(n5_params, expected_eta(n5_params, t), t)
        raw, clamped = concentration_bound(n5_params, lam, 1.0, t)
        assert raw == pytest.approx(70116928604.06665, rel=1e-9)
        assert clamped == 1.0

    def test_clamp_is_a_probability(self, n5_params):
        for t in (10, 100, 1000):
            lam = lambda_t(n5_params, expected_eta(n5_params, t), t)
            raw, clamped = concentration_bound(n5_params, lam, 1.0, t)
            assert 0.0 <= clamped <= 1.0
            assert clamped == min(1.0, raw)

    def test_overflow_returns_inf(self, n5_params):
        # the -log(beta) term alone can push exp past the float ceiling
        raw, clamped = concentration_bound(n5_params, 0.0, 5e-324, 3)
        assert raw == math.inf and clamped == 1.0


class TestRegretBound:
    def test_terms_pinned_at_benchmark_horizon(self, n5_params):
        reg = regret_bound(n5_params, 1000)
        assert reg.total == pytest.approx(1.6038752709e17, rel=1e-8)
        want_terms = (1.603875e17, 4.485448e5, 1.743663e4, 1.131938e4,
                      3.108490e4, 200.0)
        for got, want in zip(reg.terms, want_terms):
            assert got == pytest.approx(want, rel=1e-4)

    def test_total_is_sum_of_terms(self, n5_params):
        for T in (100, 1000, 20000):
            reg = regret_bound(n5_params, T)
            assert reg.total == pytest.approx(sum(reg.terms), rel=1e-12)
            assert all(term >= 0.0 for term in reg.terms)

    def test_grows_with_horizon(self, n5_params):
        totals = [regret_bound(n5_params, T).total for T in (100, 1000, 10000)]
        assert totals[0] < totals[1] < totals[2]


class TestUniformDifferenceCdf:
    def test_exact_anchor_points(self):
        lo, hi = -20.0, 60.0
        W = hi - lo
        assert cdf_uniform_difference(0.0, lo, hi) == 0.5
        assert cdf_uniform_difference(W, lo, hi) == 1.0
        assert cdf_uniform_difference(-W, lo, hi) == 0.0
        assert cdf_uniform_difference(-W / 2, lo, hi) == pytest.approx(1 / 8)
        assert cdf_uniform_difference(W / 2, lo, hi) == pytest.approx(7 / 8)

    def test_clamps_outside_support(self):
        assert cdf_uniform_difference(-1000.0, -20.0, 60.0) == 0.0
        assert cdf_uniform_difference(1000.0, -20.0, 60.0) == 1.0

    @given(st.floats(-90, 90), st.floats(-90, 90))
    def test_monotone(self, a, b):
        lo_v, hi_v = sorted((a, b))
        assert (cdf_uniform_difference(lo_v, -20.0, 60.0)
                <= cdf_uniform_difference(hi_v, -20.0, 60.0) + 1e-12)

    def test_matches_monte_carlo_quick(self):
        rng = np.random.default_rng(99)
        lo, hi = -20.0, 60.0
        diff = rng.uniform(lo, hi, 100_000) - rng.uniform(lo, hi, 100_000)
        grid = np.linspace(-80, 80, 33)
        for d in grid:
            emp = (diff <= d).mean()
            assert cdf_uniform_difference(d, lo, hi) == pytest.approx(
                emp, abs=1.5e-2)
