"""Tests for max-plus scalars and tabulated pressure functionals."""

import math

import numpy as np
import pytest

from maxtherm.semiring import (
    BOTTOM,
    DensitySample,
    IdempotentPressure,
    MaxPlus,
    axioms_check,
    odot,
    oplus,
    pressure_eval,
)
from maxtherm.simplex import SimplexGrid, shannon_entropy

LOG3 = 1.0986122886681098


class TestScalars:
    def test_oplus_neutral_bottom(self):
        assert oplus(2.0, BOTTOM) == MaxPlus(2.0)
        assert oplus(BOTTOM, -7.5) == MaxPlus(-7.5)

    def test_oplus_idempotent(self):
        assert oplus(3.0, 3.0) == MaxPlus(3.0)

    def test_oplus_max(self):
        assert oplus(-1.5, 2.5) == MaxPlus(2.5)

    def test_odot_absorbing_bottom(self):
        assert odot(BOTTOM, 5.0).is_bottom
        assert odot(5.0, BOTTOM).is_bottom
        assert odot(BOTTOM, BOTTOM).is_bottom

    def test_odot_addition(self):
        assert odot(2.0, 3.0) == MaxPlus(5.0)

    def test_odot_zero_neutral(self):
        for x in (-3.25, 0.0, 17.5):
            assert odot(0.0, x) == MaxPlus(x)

    def test_bottom_is_distinct_state_not_sentinel(self):
        big = MaxPlus(-1e308)
        assert not big.is_bottom
        assert BOTTOM != big
        # neutrality and absorption are exact even against huge finite values
        assert oplus(big, BOTTOM) == big
        assert odot(big, 0.0) == big
        assert odot(BOTTOM, 1e300).is_bottom

    def test_rejects_nan_and_plus_inf(self):
        with pytest.raises(ValueError):
            MaxPlus(float("nan"))
        with pytest.raises(ValueError):
            MaxPlus(float("inf"))


class TestSemiringLaws:
    """The laws hold exactly; floats only reorder, never approximate max."""

    def test_laws_on_random_triples(self):
        rng = np.random.default_rng(42)
        pool = [MaxPlus(v) for v in rng.uniform(-10, 10, 30)] + [BOTTOM] * 6
        rng.shuffle(pool)
        triples = [tuple(rng.choice(len(pool), 3)) for _ in range(300)]
        for ia, ib, ic in triples:
            a, b, c = pool[ia], pool[ib], pool[ic]
            # max-based laws are exact in floats
            assert oplus(oplus(a, b), c) == oplus(a, oplus(b, c))
            assert oplus(a, b) == oplus(b, a)
            assert oplus(a, a) == a
            assert odot(a, b) == odot(b, a)
            # distributivity is exact: x -> a + x commutes with max because
            # IEEE rounding is monotone
            assert odot(a, oplus(b, c)) == oplus(odot(a, b), odot(a, c))
            # + regroups with rounding, so associativity holds to ulp scale
            lhs = odot(odot(a, b), c)
            rhs = odot(a, odot(b, c))
            if lhs.is_bottom or rhs.is_bottom:
                assert lhs.is_bottom and rhs.is_bottom
            else:
                assert abs(lhs.value - rhs.value) <= 1e-12


class TestDensitySample:
    def test_requires_nonempty_support(self):
        with pytest.raises(ValueError, match="support"):
            DensitySample(["a", "b"], [BOTTOM, BOTTOM])

    def test_requires_points(self):
        with pytest.raises(ValueError, match="empty density"):
            DensitySample([], [])

    def test_normalization(self):
        dens = DensitySample([0, 1, 2], [-1.0, -3.0, BOTTOM])
        assert not dens.is_normalized
        normed = dens.normalized()
        assert normed.is_normalized
        assert normed.values[0] == 0.0
        assert np.isneginf(normed.values[2])


class TestPressureEval:
    def test_pure_max(self):
        ell = IdempotentPressure(DensitySample(["p1", "p2"], [0.0, 0.0]))
        g = {"p1": 1.0, "p2": 4.0}.get
        res = pressure_eval(ell, g)
        assert res.value == MaxPlus(4.0)
        assert res.argmax == ["p2"]

    def test_bottom_excludes_point(self):
        ell = IdempotentPressure(DensitySample(["p1", "p2"], [0.0, BOTTOM]))
        g = {"p1": 1.0, "p2": 100.0}.get
        res = pressure_eval(ell, g)
        assert res.value == MaxPlus(1.0)
        assert res.argmax == ["p1"]

    def test_shannon_on_simplex_grid_peaks_at_barycenter(self):
        # m divisible by 3 so the barycenter is a grid point
        grid = SimplexGrid(3, 30)
        pts = [tuple(p) for p in grid.points()]
        ell = IdempotentPressure(
            DensitySample(pts, [shannon_entropy(p) for p in pts])
        )
        res = pressure_eval(ell, lambda p: 0.0)
        assert res.value.value == pytest.approx(LOG3, abs=1e-12)
        assert len(res.argmax) == 1
        assert res.argmax[0] == pytest.approx((1 / 3, 1 / 3, 1 / 3))

    def test_normalized_density_constant_observable(self):
        rng = np.random.default_rng(3)
        dens = DensitySample(list(range(8)), rng.uniform(-5, 0, 8)).normalized()
        ell = IdempotentPressure(dens)
        for c in (-2.5, 0.0, 7.0):
            assert ell(lambda p, c=c: c) == c

    def test_argmax_tolerance_collects_ties(self):
        ell = IdempotentPressure(DensitySample([0, 1, 2], [0.0, 0.0, -1.0]))
        res = pressure_eval(ell, lambda p: 0.0)
        assert set(res.argmax_indices) == {0, 1}


class TestAxioms:
    def test_zero_scalar_identity(self):
        ell = IdempotentPressure(DensitySample([0, 1], [-0.5, 0.0]))
        rep = axioms_check(ell, lambda p: float(p), lambda p: -float(p), 0.0)
        assert rep.homogeneity_residual == 0.0

    def test_random_densities_and_observables(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 12))
            vals = rng.uniform(-4, 4, n)
            vals[rng.random(n) < 0.2] = -np.inf
            if not np.isfinite(vals).any():
                vals[0] = 0.0
            ell = IdempotentPressure(DensitySample(list(range(n)), vals))
            ga = rng.uniform(-3, 3, n)
            gb = rng.uniform(-3, 3, n)
            c = float(rng.uniform(-5, 5))
            rep = axioms_check(ell, lambda p: ga[p], lambda p: gb[p], c)
            assert rep.max_residual <= 1e-12

    def test_additivity_reduces_to_idempotency(self):
        ell = IdempotentPressure(DensitySample([0, 1], [0.0, -1.0]))
        g = lambda p: float(p)
        rep = axioms_check(ell, g, g, 2.5)
        assert rep.additivity_residual == 0.0
