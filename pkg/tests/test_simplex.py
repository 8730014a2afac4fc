"""Tests for pressures and equilibria on the probability simplex."""

import numpy as np
import pytest
from scipy.optimize import brentq

from maxtherm import simplex
from maxtherm.simplex import (
    BernoulliFamily,
    Level1Observable,
    MarkovFamily,
    NonlinearSpec,
    SimplexGrid,
    affine_observable_family,
    concave_density_identity,
    concave_envelope_1d,
    convex_pressure_gamma,
    entropy_recovery,
    gibbs_solution,
    inclusion_j,
    level2_pressure,
    log_sum_exp,
    nonlinear_pressure,
    pressure_axioms_check,
    shannon_entropy,
    shannon_entropy_table,
    shannon_recovery_minimizer,
)

LOG2 = 0.6931471805599453
LOG3 = 1.0986122886681098
LOG_1PE = 1.3132616875182228            # log(1 + e)
GIBBS_10 = (0.7310585786300049, 0.2689414213699951)   # softmax(1, 0)
SHANNON_AT_GIBBS_10 = 0.5822031088882179              # log(1+e) - e/(1+e)


class TestShannon:
    def test_point_mass(self):
        assert shannon_entropy([1.0, 0.0]) == 0.0

    def test_uniform_two(self):
        assert shannon_entropy([0.5, 0.5]) == pytest.approx(LOG2, abs=1e-15)

    def test_uniform_three(self):
        assert shannon_entropy([1 / 3, 1 / 3, 1 / 3]) == pytest.approx(
            LOG3, abs=1e-14
        )

    def test_table_matches_scalar(self):
        rng = np.random.default_rng(0)
        pts = rng.dirichlet(np.ones(4), size=20)
        table = shannon_entropy_table(pts)
        for row, val in zip(pts, table):
            assert val == pytest.approx(shannon_entropy(row), abs=1e-14)

    def test_validation(self):
        with pytest.raises(ValueError):
            simplex.as_prob_vector([0.5, 0.6])
        with pytest.raises(ValueError):
            simplex.as_prob_vector([1.5, -0.5])


class TestInclusion:
    def test_zero_observable(self):
        j = inclusion_j(Level1Observable((0.0, 0.0, 0.0)))
        pts = np.random.default_rng(1).dirichlet(np.ones(3), size=10)
        assert np.all(j(pts) == 0.0)

    def test_expectation(self):
        j = inclusion_j(Level1Observable((1.0, 0.0)))
        assert j.at(np.array([0.3, 0.7])) == pytest.approx(0.3, abs=1e-15)

    def test_pointwise_max_dominates_included_max(self):
        # integrating the pointwise max dominates the max of integrals,
        # with strict gap when the observables cross on the support
        phi = np.array([1.0, 0.0])
        psi = np.array([0.0, 1.0])
        pointwise_max = inclusion_j(Level1Observable(np.maximum(phi, psi)))
        j_phi = inclusion_j(Level1Observable(phi))
        j_psi = inclusion_j(Level1Observable(psi))
        rng = np.random.default_rng(2)
        pts = rng.dirichlet(np.ones(2), size=200)
        lhs = pointwise_max(pts)
        rhs = np.maximum(j_phi(pts), j_psi(pts))
        assert np.all(lhs >= rhs - 1e-15)
        # strict witness at the uniform measure: 1 > 1/2
        mid = np.array([[0.5, 0.5]])
        assert pointwise_max(mid)[0] == pytest.approx(1.0)
        assert max(j_phi(mid)[0], j_psi(mid)[0]) == pytest.approx(0.5)


class TestGibbs:
    def test_symmetric(self):
        assert gibbs_solution(Level1Observable((0.0, 0.0, 0.0))) == pytest.approx(
            np.full(3, 1 / 3)
        )

    def test_closed_form_1_0(self):
        assert gibbs_solution(Level1Observable((1.0, 0.0))) == pytest.approx(
            GIBBS_10, abs=1e-15
        )

    def test_grid_oracle_matches_closed_form(self):
        # brute-force maximization of entropy + included observable on a
        # fine lattice, the stated independent route to the equilibrium
        g = Level1Observable((1.0, 0.0))
        grid = SimplexGrid(2, 2000, refine_rounds=0)
        pts = grid.points()
        vals = shannon_entropy_table(pts) + inclusion_j(g)(pts)
        best = pts[np.argmax(vals)]
        assert np.abs(best - gibbs_solution(g)).max() <= 1e-3

    def test_refined_search_sharpens_the_oracle(self):
        g = Level1Observable((1.0, 0.0))
        res = level2_pressure(shannon_entropy_table, inclusion_j(g), SimplexGrid(2, 2000))
        assert np.abs(res.argmax[0] - gibbs_solution(g)).max() <= 1e-6
        assert res.value == pytest.approx(LOG_1PE, abs=1e-10)


class TestLevel2Pressure:
    def test_matches_gibbs_route(self):
        rng = np.random.default_rng(5)
        grid = SimplexGrid(2, 500)
        for _ in range(5):
            g = Level1Observable(rng.uniform(-2, 2, 2))
            res = level2_pressure(shannon_entropy_table, inclusion_j(g), grid)
            assert res.value == pytest.approx(log_sum_exp(g), abs=1e-6)
            assert np.abs(res.argmax[0] - gibbs_solution(g)).max() <= 1e-4

    def test_quadratic_equilibria_are_two_symmetric_points(self):
        # independent oracle: critical point of H(p) + 2(2p-1)^2 via the
        # derivative root; the maximizer pair hugs the simplex corners
        pstar = brentq(
            lambda p: np.log((1 - p) / p) + 16 * p - 8, 1e-12, 0.4, xtol=1e-15
        )
        beta = 2.0
        g = simplex.Level2Observable(
            lambda pts: beta * (pts[:, 0] - pts[:, 1]) ** 2
        )
        res = level2_pressure(
            shannon_entropy_table, g, SimplexGrid(2, 2000), argmax_tol=1e-6
        )
        assert len(res.argmax) == 2
        firsts = sorted(float(p[0]) for p in res.argmax)
        assert firsts[0] == pytest.approx(pstar, abs=1e-6)
        assert firsts[1] == pytest.approx(1 - pstar, abs=1e-6)
        # the equilibrium set is not a singleton and not convex: the
        # midpoint (the uniform measure) is not an equilibrium
        mid_val = shannon_entropy([0.5, 0.5]) + 0.0
        assert mid_val < res.value - 1.0

    def test_delta_density(self):
        grid = SimplexGrid(2, 100)
        mu0 = np.array([0.25, 0.75])

        def h(pts):
            pts = np.atleast_2d(pts)
            hit = np.abs(pts[:, 0] - mu0[0]) < 1e-12
            return np.where(hit, 0.0, -np.inf)

        g = simplex.Level2Observable(lambda pts: 3.0 * pts[:, 0])
        res = level2_pressure(h, g, grid)
        assert res.value == pytest.approx(0.75, abs=1e-12)
        assert len(res.argmax) == 1
        assert res.argmax[0] == pytest.approx(mu0)


class TestConvexPressure:
    def test_uniform_case(self):
        grid = SimplexGrid(2, 1000)
        val = convex_pressure_gamma(
            shannon_entropy_table, Level1Observable((0.0, 0.0)), grid
        )
        assert val == pytest.approx(LOG2, abs=1e-9)

    def test_log_sum_exp_closed_form(self):
        grid = SimplexGrid(2, 1000)
        val = convex_pressure_gamma(
            shannon_entropy_table, Level1Observable((1.0, 0.0)), grid
        )
        assert val == pytest.approx(LOG_1PE, abs=1e-9)

    def test_translation_invariance_exact_on_grid(self):
        grid = SimplexGrid(2, 500)
        phi = Level1Observable((0.7, -0.3))
        base = convex_pressure_gamma(shannon_entropy_table, phi, grid)
        shifted = convex_pressure_gamma(
            shannon_entropy_table, Level1Observable((0.7 - 3.0, -0.3 - 3.0)), grid
        )
        assert shifted == pytest.approx(base - 3.0, abs=1e-12)

    def test_axioms_random(self):
        rep = pressure_axioms_check(
            shannon_entropy_table, SimplexGrid(2, 2000), trials=8, seed=0
        )
        assert rep.worst <= 1e-6

    def test_monotone_under_plus_one(self):
        grid = SimplexGrid(2, 200)
        phi = Level1Observable((0.2, -0.4))
        up = Level1Observable((1.2, 0.6))
        a = convex_pressure_gamma(shannon_entropy_table, phi, grid)
        b = convex_pressure_gamma(shannon_entropy_table, up, grid)
        assert a <= b + 1e-12


class TestEntropyRecovery:
    def test_uniform_recovers_log2(self):
        grid = SimplexGrid(2, 1000)
        family = affine_observable_family(2, -6, 6, 121)
        rec = entropy_recovery(shannon_entropy_table, [0.5, 0.5], family, grid)
        assert rec == pytest.approx(LOG2, abs=1e-4)

    def test_gibbs_point_recovers_its_shannon_entropy(self):
        grid = SimplexGrid(2, 1000)
        mu = np.array(GIBBS_10)
        family = affine_observable_family(2, -6, 6, 121) + [
            shannon_recovery_minimizer(mu)
        ]
        rec = entropy_recovery(shannon_entropy_table, mu, family, grid)
        assert rec == pytest.approx(SHANNON_AT_GIBBS_10, abs=1e-4)

    def test_nonconcave_density_sits_below_recovery(self):
        grid = SimplexGrid(2, 400)
        bump_l, bump_r, sharp = 0.2, 0.8, 8.0

        def h(pts):
            x = np.atleast_2d(pts)[:, 0]
            return np.maximum(-sharp * (x - bump_l) ** 2, -sharp * (x - bump_r) ** 2)

        family = affine_observable_family(2, -6, 6, 121)
        for x in (0.2, 0.4, 0.5, 0.6, 0.8):
            mu = np.array([x, 1 - x])
            rec = entropy_recovery(h, mu, family, grid)
            assert rec >= float(h(mu[None, :])[0]) - 1e-6
        # strictly above between the bumps: recovery sees the concave hull
        rec_mid = entropy_recovery(h, [0.5, 0.5], family, grid)
        assert rec_mid > float(h(np.array([[0.5, 0.5]]))[0]) + 0.5


class TestConcaveIdentity:
    def test_affine_family_at_uniform(self):
        grid = SimplexGrid(2, 2000)
        # affine level-2 observables in the first mass
        g_family = [
            simplex.Level2Observable(lambda pts, a=a: a * pts[:, 0])
            for a in np.linspace(-4, 4, 161)
        ]
        val = concave_density_identity(
            shannon_entropy_table, [0.5, 0.5], g_family, grid
        )
        assert val == pytest.approx(LOG2, abs=1e-4)

    def test_affine_density_exact_with_negated_self(self):
        grid = SimplexGrid(2, 500)

        def h(pts):
            return 0.75 * np.atleast_2d(pts)[:, 0] - 0.25

        # g = -h (up to a constant) makes h + g constant, so the pressure
        # is attained everywhere and the identity is exact at any mu
        g_family = [simplex.Level2Observable(lambda pts: -0.75 * pts[:, 0])]
        mu = np.array([0.3, 0.7])
        val = concave_density_identity(h, mu, g_family, grid)
        assert val == pytest.approx(float(h(mu[None, :])[0]), abs=1e-12)

    def test_envelope_projects_identically(self):
        xs = np.linspace(0.0, 1.0, 2001)
        pts = np.column_stack([xs, 1 - xs])
        vals = np.maximum(-8 * (xs - 0.2) ** 2, -8 * (xs - 0.8) ** 2)
        env = concave_envelope_1d(xs, vals)
        assert np.all(env >= vals - 1e-15)
        rng = np.random.default_rng(9)
        for _ in range(20):
            phi = rng.uniform(-3, 3, 2)
            lin = pts @ phi
            assert abs((vals + lin).max() - (env + lin).max()) <= 1e-6

    def test_envelope_of_concave_data_is_itself(self):
        xs = np.linspace(0.0, 1.0, 501)
        vals = -((xs - 0.4) ** 2)
        env = concave_envelope_1d(xs, vals)
        assert np.abs(env - vals).max() <= 1e-12


class TestNonlinearPressure:
    def test_identity_transform_reduces_to_classical_pressure(self):
        spec = NonlinearSpec(F=lambda x: x, A=Level1Observable((0.8, -0.5)))
        family = BernoulliFamily(SimplexGrid(2, 1000))
        res = nonlinear_pressure(spec, family)
        assert res.value == pytest.approx(
            log_sum_exp(Level1Observable((0.8, -0.5))), abs=1e-4
        )

    def test_quadratic_has_swapped_pair(self):
        spec = NonlinearSpec(
            F=lambda x: 2.0 * x ** 2, A=Level1Observable((1.0, -1.0))
        )
        family = BernoulliFamily(SimplexGrid(2, 2000))
        res = nonlinear_pressure(spec, family, argmax_tol=1e-6)
        assert len(res.argmax) == 2
        a, b = res.argmax
        assert np.abs(a - b[::-1]).max() <= 1e-4
        assert all(abs(p[0] - 0.5) > 0.4 for p in res.argmax)

    def test_zero_beta_gives_uniform(self):
        spec = NonlinearSpec(F=lambda x: 0.0 * x, A=Level1Observable((1.0, -1.0)))
        family = BernoulliFamily(SimplexGrid(2, 1000))
        res = nonlinear_pressure(spec, family)
        assert res.value == pytest.approx(LOG2, abs=1e-9)
        assert res.argmax[0] == pytest.approx([0.5, 0.5], abs=1e-6)

    def test_infinite_transform_rejected(self):
        spec = NonlinearSpec(
            F=lambda x: np.log(x), A=Level1Observable((1.0, -1.0))
        )
        family = BernoulliFamily(SimplexGrid(2, 50))
        with pytest.raises(ValueError, match="finite"):
            with np.errstate(divide="ignore", invalid="ignore"):
                nonlinear_pressure(spec, family)

    def test_markov_family_matches_bernoulli_for_depth1(self):
        # for a symbol potential the classical pressure over one-step
        # Markov measures is attained at the Bernoulli solution
        A = Level1Observable((0.5, -0.2))
        spec = NonlinearSpec(F=lambda x: x, A=A)
        markov = MarkovFamily(resolution=50)
        res = nonlinear_pressure(spec, markov)
        assert res.value == pytest.approx(log_sum_exp(A), abs=1e-4)

    def test_markov_entropy_formula(self):
        # stationary-weighted row entropies against a hand computation
        a, b = 0.7, 0.4
        pi1 = b / (1 - a + b)
        expected = pi1 * shannon_entropy([a, 1 - a]) + (1 - pi1) * shannon_entropy(
            [b, 1 - b]
        )
        got = MarkovFamily.ks_entropy(np.array([a]), np.array([b]))[0]
        assert got == pytest.approx(expected, abs=1e-14)


class TestGridMechanics:
    def test_grid_points_are_valid_and_counted(self):
        grid = SimplexGrid(3, 7)
        pts = grid.points()
        assert pts.shape[0] == len(grid)
        assert np.allclose(pts.sum(axis=1), 1.0, atol=1e-12)
        assert (pts >= 0).all()

    def test_invalid_parameters(self):
        with pytest.raises(ValueError):
            SimplexGrid(1, 10)
        with pytest.raises(ValueError):
            SimplexGrid(2, 0)
        with pytest.raises(ValueError):
            SimplexGrid(2, 10, shrink=1.5)
