"""Tests for running-max Birkhoff sums and the large-deviation machinery."""

import numpy as np
import pytest

from maxtherm.dynamics import (
    OrbitSampler,
    bernoulli_ldp_bound,
    birkhoff_limit_test,
    c_limit_exact,
    c_maxplus_convexity_check,
    c_n_exact,
    chebyshev_step_exact,
    empirical_rate,
    ldp_upper_bound,
    maxplus_birkhoff,
    partition_function_mc,
    partition_integral_exact,
)
from maxtherm.shift import DepthKFunction, ShiftSpace

SPACE = ShiftSpace(2, 0.3)
F_FIRST = DepthKFunction(SPACE, 1, [1.0, 0.0])   # indicator of first symbol 1
LOG2 = 0.6931471805599453


class TestBirkhoffMax:
    def test_single_window(self):
        assert maxplus_birkhoff(F_FIRST, [2, 1, 2], 1) == 0.0
        assert maxplus_birkhoff(F_FIRST, [1, 2, 2], 1) == 1.0

    def test_hit_at_step_two(self):
        assert maxplus_birkhoff(F_FIRST, [2, 2, 1, 2], 3) == 1.0

    def test_all_twos_stays_zero(self):
        for n in (1, 5, 20):
            assert maxplus_birkhoff(F_FIRST, [2] * (n + 3), n) == 0.0

    def test_depth2_windows(self):
        f = DepthKFunction(SPACE, 2, [0.0, 1.0, 2.0, 3.0])
        # windows of (2,1,2): (2,1) -> 2.0, (1,2) -> 1.0
        assert maxplus_birkhoff(f, [2, 1, 2], 2) == 2.0

    def test_short_orbit_rejected(self):
        with pytest.raises(ValueError, match="too short"):
            maxplus_birkhoff(F_FIRST, [1, 2], 3)


class TestSampler:
    def test_bernoulli_reproducible(self):
        s1 = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=10, seed=3)
        s2 = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=10, seed=3)
        assert np.array_equal(s1.sample(50), s2.sample(50))

    def test_markov_rows_and_stationarity(self):
        P = np.array([[0.9, 0.1], [0.4, 0.6]])
        s = OrbitSampler.markov(P, n_orbits=4000, seed=5)
        assert s.positive_on_cylinders
        orbits = s.sample(200)
        freq1 = (orbits == 1).mean()
        assert freq1 == pytest.approx(s.probs[0], abs=0.02)

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            OrbitSampler.bernoulli([0.7, 0.7], 10, 0)
        with pytest.raises(ValueError):
            OrbitSampler.markov(np.array([[0.5, 0.4], [0.5, 0.5]]), 10, 0)

    def test_degenerate_sampler_rejected_by_limit_test(self):
        s = OrbitSampler.bernoulli([1.0, 0.0], n_orbits=10, seed=0)
        with pytest.raises(ValueError, match="positive"):
            birkhoff_limit_test(s, F_FIRST, length=100)


class TestBirkhoffLimit:
    def test_fair_coin_attains_quickly(self):
        s = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=100, seed=7)
        rep = birkhoff_limit_test(s, F_FIRST, length=200)
        assert rep.sup_value == 1.0
        assert rep.attained_fraction == 1.0
        assert rep.miss_probability_estimate == pytest.approx(0.5 ** 200)
        assert rep.first_hit_mean < 5.0

    def test_constant_observable_attains_at_one(self):
        s = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=20, seed=8)
        f = DepthKFunction(SPACE, 0, [2.5])
        rep = birkhoff_limit_test(s, f, length=10)
        assert rep.attained_fraction == 1.0
        assert rep.first_hit_mean == 1.0


class TestPartitionFunction:
    def test_half_log2_plugin(self):
        val = partition_integral_exact(0.5, np.log(2.0), 1)
        assert val == pytest.approx(0.75, abs=1e-15)
        assert np.log(val) == pytest.approx(-0.2876820724517809, abs=1e-14)

    def test_t_zero_is_one(self):
        for n in (1, 7, 30):
            assert partition_integral_exact(0.37, 0.0, n) == pytest.approx(
                1.0, abs=1e-14
            )
            assert c_n_exact(0.37, 0.0, n) == pytest.approx(0.0, abs=1e-14)

    def test_direct_cylinder_summation_oracle(self):
        # enumerate all 2^n words: symbol 2 carries mass p, the max-sum is
        # the indicator that the word is not all 2s
        rng = np.random.default_rng(9)
        for _ in range(20):
            p = float(rng.uniform(0.1, 0.9))
            t = float(rng.uniform(0.0, 2.0))
            n = int(rng.integers(1, 12))
            total = 0.0
            for code in range(2 ** n):
                bits = [(code >> (n - 1 - i)) & 1 for i in range(n)]
                count2 = sum(bits)
                mass = p ** count2 * (1 - p) ** (n - count2)
                total += np.exp(-n * t * (1.0 if count2 < n else 0.0)) * mass
            assert partition_integral_exact(p, t, n) == pytest.approx(
                total, abs=1e-12
            )

    def test_c_n_limit(self):
        # at p = 0.5, t = 0.2 the limit is max(-0.2, log 0.5) = -0.2
        assert c_limit_exact(0.5, 0.2) == pytest.approx(-0.2)
        assert c_n_exact(0.5, 0.2, 2000) == pytest.approx(-0.2, abs=0.01)
        # deep in the other regime the limit is log p
        assert c_limit_exact(0.5, 3.0) == pytest.approx(np.log(0.5))
        assert c_n_exact(0.5, 3.0, 2000) == pytest.approx(np.log(0.5), abs=0.01)

    def test_mc_matches_exact_within_ci(self):
        p, t, n = 0.5, 0.3, 10
        sampler = OrbitSampler.bernoulli([1 - p, p], n_orbits=100_000, seed=11)
        est = partition_function_mc(sampler, F_FIRST, -t, n)
        exact = c_n_exact(p, t, n)
        assert est.ci_low <= exact <= est.ci_high
        assert est.value == pytest.approx(exact, abs=5e-3)

    def test_mc_nonnegative_t_tends_to_sup(self):
        sampler = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=20_000, seed=12)
        est = partition_function_mc(sampler, F_FIRST, 1.0, 60)
        assert est.value == pytest.approx(1.0, abs=0.01)   # t * sup f = 1

    def test_mc_lower_bound_at_negative_t(self):
        # c(-t) >= -t * sup f at finite n
        sampler = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=20_000, seed=13)
        t = 0.4
        est = partition_function_mc(sampler, F_FIRST, -t, 40)
        assert est.value >= -t * 1.0 - 1e-9


class TestLdpBound:
    def test_bernoulli_closed_form(self):
        p, b = 0.5, 0.5
        t_star, bound = bernoulli_ldp_bound(p, b)
        assert t_star == pytest.approx(-np.log(p), abs=1e-8)
        assert bound == pytest.approx((1 - b) * np.log(p), abs=1e-8)

    def test_threshold_to_zero_recovers_log_p(self):
        p = 0.3
        _, bound = bernoulli_ldp_bound(p, 1e-9)
        assert bound == pytest.approx(np.log(p), abs=1e-6)

    def test_invalid_threshold_rejected(self):
        with pytest.raises(ValueError, match="below sup"):
            ldp_upper_bound(lambda t: max(-t, np.log(0.5)), 1.5, sup_f=1.0)

    def test_generic_convex_objective(self):
        # smooth strictly convex case with a calculus solution:
        # minimize t b + t^2 / 2 at t = -b -- but t >= 0 pins it at 0 for
        # b > 0; use c(-t) = t^2/2 - t so the minimum is at t = 1 - b
        b = 0.25
        t_star, bound = ldp_upper_bound(
            lambda t: t ** 2 / 2 - t, b, sup_f=1.0, t_max=5.0
        )
        assert t_star == pytest.approx(1 - b, abs=1e-7)
        assert bound == pytest.approx(b * (1 - b) + (1 - b) ** 2 / 2 - (1 - b),
                                      abs=1e-10)


class TestEmpiricalRate:
    def test_rate_is_log_p_at_every_n(self):
        est = empirical_rate(0.5, 0.5, [1, 2, 5, 10, 100, 5000])
        for rate in est.rates:
            assert rate == pytest.approx(np.log(0.5), abs=1e-12)

    def test_explicit_n10_value(self):
        est = empirical_rate(0.5, 0.5, [10])
        assert est.rates[0] == pytest.approx(np.log(0.5 ** 10) / 10, abs=1e-15)

    def test_strict_gap_to_bound(self):
        est = empirical_rate(0.5, 0.5, [10])
        assert est.limit_rate < est.ldp_bound
        assert est.ldp_bound == pytest.approx(0.5 * np.log(0.5), abs=1e-8)

    def test_threshold_above_sup_gives_zero_rate(self):
        est = empirical_rate(0.4, 1.5, [3, 7])
        assert est.rates == [0.0, 0.0]


class TestChebyshevStep:
    def test_exact_inequality_in_the_example(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            p = float(rng.uniform(0.1, 0.9))
            b = float(rng.uniform(0.05, 0.95))
            t = float(rng.uniform(0.0, 3.0))
            n = int(rng.integers(1, 20))
            prob, bound = chebyshev_step_exact(p, t, b, n)
            assert prob <= bound + 1e-12


class TestMaxPlusConvexity:
    def test_equal_arguments(self):
        sampler = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=2000, seed=15)
        f = DepthKFunction(SPACE, 1, [2.0, 1.0])   # f >= 1
        rep = c_maxplus_convexity_check(f, sampler, s=0.4, t=0.4,
                                        alpha=0.0, beta=-0.3, n=30)
        assert rep.equality_residual <= 1e-12
        assert rep.convexity_slack >= -1e-12

    def test_degenerate_weight(self):
        sampler = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=2000, seed=16)
        f = DepthKFunction(SPACE, 1, [2.0, 1.0])
        rep = c_maxplus_convexity_check(f, sampler, s=0.7, t=0.2,
                                        alpha=0.0, beta=-np.inf, n=25)
        assert rep.convexity_slack >= -1e-15

    def test_requires_f_at_least_one(self):
        sampler = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=100, seed=17)
        with pytest.raises(ValueError, match="f >= 1"):
            c_maxplus_convexity_check(F_FIRST, sampler, 0.1, 0.2, 0.0, -1.0)

    def test_closed_form_shifted_example(self):
        # shifting f up by 1 shifts c by t: c_new(u) = max(u, log p) + u
        p = 0.4
        c_shifted = lambda u: max(u, np.log(p)) + u
        sampler = OrbitSampler.bernoulli([1 - p, p], n_orbits=10, seed=18)
        f = DepthKFunction(SPACE, 1, [2.0, 1.0])
        rep = c_maxplus_convexity_check(
            f, sampler, s=-0.8, t=0.3, alpha=0.0, beta=-0.5, n=20,
            c_exact=c_shifted,
        )
        assert rep.equality_residual <= 1e-12
        assert rep.convexity_slack >= -1e-12

    def test_weights_must_be_normalized(self):
        sampler = OrbitSampler.bernoulli([0.5, 0.5], n_orbits=100, seed=19)
        f = DepthKFunction(SPACE, 1, [2.0, 1.0])
        with pytest.raises(ValueError, match="max"):
            c_maxplus_convexity_check(f, sampler, 0.1, 0.2, -0.5, -1.0)
