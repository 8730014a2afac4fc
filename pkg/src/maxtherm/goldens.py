"""Golden verification battery: every closed-form result as a pass/fail check.

Each check reproduces one exactly-known result (closed forms, theorem
bounds, operator identities) with its stated tolerance.  The checks are
callable individually, from the test suite, or through the command-line
``verify`` subcommand, which prints one line per check.

Randomized checks draw through ``numpy.random.default_rng`` with explicit
seeds, so reruns are reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import dynamics, ifs, shift, simplex, transport
from .shift import (
    CylinderMeasure,
    DepthKFunction,
    Jacobian,
    ShiftSpace,
    compose_duals,
    dual_apply,
    lipschitz_constant,
    make_bernoulli_jacobian,
    pushforward_apply,
)


# ---------------------------------------------------------------------------
# Random instance generators (shared with the test suite)
# ---------------------------------------------------------------------------


def random_jacobian(space: ShiftSpace, depth: int, rng: np.random.Generator) -> Jacobian:
    """Random admissible kernel: normalized draw shrunk toward uniform until
    its Lipschitz constant is below 1."""
    raw = rng.uniform(0.1, 1.0, (space.d, space.d ** (depth - 1)))
    raw /= raw.sum(axis=0)
    vals = raw.reshape(-1)
    lip = lipschitz_constant(DepthKFunction(space, depth, vals))
    if lip > 1.0:
        lam = 0.999 / lip
        vals = (1.0 - lam) / space.d + lam * vals
    return Jacobian(space, depth, vals)


def random_measure(
    space: ShiftSpace, depth: int, rng: np.random.Generator, spiky: bool = False
) -> CylinderMeasure:
    if spiky:
        masses = rng.dirichlet(np.full(space.n_words(depth), 0.2))
        # snap near-zero masses to exact zeros: denormal-scale entries are
        # outside any LP solver's feasible scaling, exact zeros are fine
        masses[masses < 1e-12] = 0.0
        masses /= masses.sum()
    else:
        masses = rng.uniform(0.0, 1.0, space.n_words(depth))
        masses /= masses.sum()
    return CylinderMeasure(space, depth, masses)


def two_bump_density(
    centers=(0.2, 0.8), sharpness: float = 8.0
) -> Callable[[np.ndarray], np.ndarray]:
    """Non-concave density on the d=2 simplex: the max of two downward
    parabolas in the first mass, peaking at 0."""
    c1, c2 = centers

    def h(pts: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(pts)[:, 0]
        return np.maximum(-sharpness * (x - c1) ** 2, -sharpness * (x - c2) ** 2)

    return h


def random_mpifs(
    n_points: int, rng: np.random.Generator, constant_maps: bool = True
) -> ifs.MpIFSSystem:
    q = -rng.exponential(1.0, (n_points, n_points))
    q -= q.max(axis=0, keepdims=True)
    if constant_maps:
        return ifs.MpIFSSystem.constant_maps(q)
    maps = rng.integers(0, n_points, (n_points, n_points))
    return ifs.MpIFSSystem(maps, q)


# ---------------------------------------------------------------------------
# Battery plumbing
# ---------------------------------------------------------------------------


@dataclass
class GoldenResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def _result(name: str, start: float, passed: bool, detail: str) -> GoldenResult:
    return GoldenResult(name, passed, detail, time.time() - start)


# ---------------------------------------------------------------------------
# 1. Gibbs equilibria on the simplex
# ---------------------------------------------------------------------------


def check_gibbs_equilibrium(seed: int = 11, per_d: int = 25) -> GoldenResult:
    """Lattice search recovers the softmax equilibrium and its pressure."""
    start = time.time()
    rng = np.random.default_rng(seed)
    worst_point, worst_value = 0.0, 0.0
    for d, m in ((2, 400), (3, 60)):
        grid = simplex.SimplexGrid(d, m)
        for _ in range(per_d):
            g = simplex.Level1Observable(rng.uniform(-2.0, 2.0, d))
            res = simplex.level2_pressure(
                simplex.shannon_entropy_table, simplex.inclusion_j(g), grid
            )
            target = simplex.gibbs_solution(g)
            worst_point = max(
                worst_point, float(np.abs(res.argmax[0] - target).max())
            )
            worst_value = max(worst_value, abs(res.value - simplex.log_sum_exp(g)))
    passed = worst_point <= 1e-3 and worst_value <= 1e-4
    return _result(
        "gibbs-equilibrium", start, passed,
        f"worst argmax gap {worst_point:.2e} (tol 1e-3), "
        f"worst pressure gap {worst_value:.2e} (tol 1e-4)",
    )


# ---------------------------------------------------------------------------
# 2. Tree W1 against the LP oracle
# ---------------------------------------------------------------------------


def check_transport_oracle(seed: int = 12) -> GoldenResult:
    """Closed-form tree W1 equals the transportation LP within 1e-9."""
    start = time.time()
    rng = np.random.default_rng(seed)
    plan = [(2, depth, 24) for depth in (1, 2, 3, 4, 5)]
    plan += [(3, depth, 17) for depth in (1, 2, 3, 4)]
    plan += [(3, 5, 12)]
    worst = 0.0
    count = 0
    for d, depth, reps in plan:
        space = ShiftSpace(d, 0.3 if d == 2 else 0.24)
        for i in range(reps):
            mu = random_measure(space, depth, rng, spiky=(i % 3 == 0))
            nu = random_measure(space, depth, rng)
            report = transport.w1_lp_oracle(mu, nu)
            worst = max(worst, abs(transport.w1_tree(mu, nu) - report.w1))
            worst = max(worst, report.duality_gap)
            count += 1
    passed = worst <= 1e-9
    return _result(
        "transport-oracle", start, passed,
        f"{count} pairs, worst |tree - LP| and duality gap {worst:.2e} (tol 1e-9)",
    )


# ---------------------------------------------------------------------------
# 3. Contraction bounds of the dual transfer operators
# ---------------------------------------------------------------------------


def check_contraction_bounds(seed: int = 13, trials: int = 1000) -> GoldenResult:
    """Three theorem bounds hold on every randomized trial (slack 1e-10)."""
    start = time.time()
    rng = np.random.default_rng(seed)
    space = ShiftSpace(2, 0.3)
    r = space.contraction_rate
    worst_ratio = 0.0
    worst_perturb = -np.inf
    worst_joint = -np.inf
    for _ in range(trials):
        depth_j = int(rng.integers(1, 3))
        J1 = random_jacobian(space, depth_j, rng)
        J2 = random_jacobian(space, depth_j, rng)
        mu = random_measure(space, 4, rng)
        nu = random_measure(space, 4, rng)
        worst_ratio = max(worst_ratio, transport.contraction_check(J1, mu, nu))
        w1, bound = transport.jacobian_perturbation_check(J1, J2, mu)
        worst_perturb = max(worst_perturb, w1 - bound)
        joint = transport.joint_contraction_check(J1, J2, mu, nu)
        worst_joint = max(worst_joint, -joint.slack)
    passed = (
        worst_ratio <= r + 1e-10
        and worst_perturb <= 1e-10
        and worst_joint <= 1e-10
    )
    return _result(
        "contraction-bounds", start, passed,
        f"{trials} trials each: max ratio {worst_ratio:.6f} (bound {r}), "
        f"perturbation excess {worst_perturb:.2e}, joint excess {worst_joint:.2e}",
    )


# ---------------------------------------------------------------------------
# 4. Section identity of pushforward after dual transfer
# ---------------------------------------------------------------------------


def check_section_identity(seed: int = 14, trials: int = 1000) -> GoldenResult:
    """Pushforward undoes the dual transfer exactly (1e-12)."""
    start = time.time()
    rng = np.random.default_rng(seed)
    space = ShiftSpace(2, 0.3)
    worst = 0.0
    for _ in range(trials):
        depth = int(rng.integers(1, 5))
        J = random_jacobian(space, int(rng.integers(1, min(depth + 1, 3) + 1)), rng)
        mu = random_measure(space, depth, rng)
        back = pushforward_apply(dual_apply(J, mu))
        worst = max(worst, float(np.abs(back.masses - mu.masses).max()))
    passed = worst <= 1e-12
    return _result(
        "section-identity", start, passed,
        f"{trials} trials, max |recovered - original| = {worst:.2e} (tol 1e-12)",
    )


# ---------------------------------------------------------------------------
# 5. Inhomogeneous product formula and shift invariance
# ---------------------------------------------------------------------------


def check_product_formula() -> GoldenResult:
    """Two-kernel composition yields the product masses; invariance only
    for constant parameters."""
    start = time.time()
    space = ShiftSpace(2, 0.3)
    j03 = make_bernoulli_jacobian(0.3, space)
    j06 = make_bernoulli_jacobian(0.6, space)
    expected = np.array([0.18, 0.12, 0.42, 0.28])

    seeds = [
        CylinderMeasure.trivial(space),
        CylinderMeasure.point_mass(space, (2, 1)),
        CylinderMeasure(space, 1, [0.85, 0.15]),
    ]
    worst = 0.0
    for nu0 in seeds:
        res = compose_duals([j03, j06], nu0, track_trace=False)
        top2 = res.measure.at_depth(2).masses
        worst = max(worst, float(np.abs(top2 - expected).max()))

    # inhomogeneous product is not shift invariant ...
    rho = compose_duals(
        [j03, j06, make_bernoulli_jacobian(0.45, space)],
        CylinderMeasure.trivial(space),
        track_trace=False,
    ).measure
    shifted = pushforward_apply(rho)
    inhomo_gap = float(np.abs(shifted.masses - rho.coarsen().masses).max())

    # ... while the constant-parameter product is
    const = compose_duals(
        [j03, j03, j03], CylinderMeasure.trivial(space), track_trace=False
    ).measure
    const_gap = float(
        np.abs(pushforward_apply(const).masses - const.coarsen().masses).max()
    )

    passed = worst <= 1e-12 and inhomo_gap > 1e-3 and const_gap <= 1e-12
    return _result(
        "product-formula", start, passed,
        f"mass error {worst:.2e} over 3 seeds (tol 1e-12); shift gap "
        f"{inhomo_gap:.3f} inhomogeneous vs {const_gap:.2e} constant",
    )


# ---------------------------------------------------------------------------
# 6. Invariant pressure of weighted kernel families
# ---------------------------------------------------------------------------


def _mass_of_one(mu: CylinderMeasure) -> float:
    return mu.mass_of((1,))


def check_ifs_invariant_pressure(seed: int = 16) -> GoldenResult:
    start = time.time()
    space = ShiftSpace(2, 0.3)
    r = space.contraction_rate
    notes = []
    ok = True

    # geometric W1 decay of the composition prefixes toward Bernoulli(p)
    p = 0.35
    jp = make_bernoulli_jacobian(p, space)
    res = compose_duals([jp] * 9, CylinderMeasure.point_mass(space, (2,)))
    trace = res.w1_trace
    ratios = [
        trace[i + 1] / trace[i] for i in range(len(trace) - 1) if trace[i] > 1e-13
    ]
    decay_ok = all(q <= r + 1e-12 for q in ratios)
    target = CylinderMeasure.bernoulli(space, [p, 1 - p], res.measure.depth)
    limit_gap = transport.w1_tree(res.measure, target)
    limit_ok = limit_gap <= r ** 9
    ok &= decay_ok and limit_ok
    notes.append(f"decay ratios <= {max(ratios):.3f} (r={r}), limit gap {limit_gap:.2e}")

    # normalization: zero observable has pressure exactly 0
    fam = ifs.WeightedJacobianFamily([jp], [0.0])
    nu0 = CylinderMeasure.point_mass(space, (2,))
    zero = ifs.invariant_pressure_solve(fam, lambda mu: 0.0, 8, nu0)
    ok &= zero.value == 0.0
    notes.append(f"pressure of 0 = {zero.value:g}")

    # single-kernel family: pressure of mass-of-[1] approaches p
    pres = ifs.invariant_pressure_solve(fam, _mass_of_one, 10, nu0, lip_g=1.0)
    gap = abs(pres.value - p)
    ok &= gap <= pres.error_bound and pres.fixed_point_residual <= pres.error_bound
    notes.append(f"single-kernel pressure gap {gap:.2e} <= bound {pres.error_bound:.2e}")

    # seed independence
    alt = ifs.invariant_pressure_solve(
        fam, _mass_of_one, 10, CylinderMeasure(space, 1, [0.5, 0.5]), lip_g=1.0
    )
    seed_gap = abs(alt.value - pres.value)
    ok &= seed_gap <= r ** 10 + 1e-12
    notes.append(f"seed dependence {seed_gap:.2e} <= r^10 = {r**10:.2e}")

    # two-kernel enumeration against brute force, exact
    fam2 = ifs.WeightedJacobianFamily(
        [make_bernoulli_jacobian(0.3, space), make_bernoulli_jacobian(0.7, space)],
        [0.0, -1.0],
    )
    N = 10
    sample = ifs.attractor_build(fam2, N, nu0, eps=0.0)
    brute_best = -np.inf
    exact = True
    for leaf in sample.leaves:
        rho = nu0
        for i in reversed(leaf.word):
            rho = dual_apply(fam2.jacobians[i - 1], rho)
        exact &= np.array_equal(rho.masses, leaf.measure.masses)
        brute_best = max(brute_best, leaf.weight + _mass_of_one(rho))
    solved = ifs.invariant_pressure_solve(fam2, _mass_of_one, N, nu0, eps=0.0)
    exact &= solved.value == brute_best
    ok &= exact
    notes.append(f"2^{N} words match brute force exactly: {exact}")

    return _result("ifs-invariant-pressure", start, bool(ok), "; ".join(notes))


# ---------------------------------------------------------------------------
# 7. Max-plus IFS operators and the inverse problem
# ---------------------------------------------------------------------------


def check_mpifs_operators(seed: int = 17, systems: int = 100) -> GoldenResult:
    start = time.time()
    rng = np.random.default_rng(seed)
    worst_dual = 0.0
    consistent = True
    worst_inverse = 0.0
    for _ in range(systems):
        n = int(rng.integers(2, 51))
        sys = random_mpifs(n, rng, constant_maps=True)
        lam = -rng.exponential(1.0, n)
        lam -= lam.max()
        for _ in range(3):
            f = rng.uniform(-2.0, 2.0, n)
            lhs = ifs.mpifs_markov(lam, f, sys)
            rhs = ifs.mpifs_pressure(lam, ifs.mpifs_ruelle(f, sys))
            worst_dual = max(worst_dual, abs(lhs - rhs))

        fixed, _ = ifs.mpifs_fixed_density(sys)
        rep = ifs.mpifs_invariance_check(fixed, sys)
        consistent &= rep.consistent() and all(rep.passes())

        off = fixed.copy()
        off[int(rng.integers(0, n))] -= 0.7
        rep_off = ifs.mpifs_invariance_check(off, sys)
        consistent &= rep_off.consistent() and not any(rep_off.passes())

        h = -rng.exponential(1.0, n)
        h -= h.max()
        sol = ifs.inverse_problem_solve(h)
        worst_inverse = max(worst_inverse, sol.eq_residual, sol.normalization_residual)
    passed = worst_dual <= 1e-12 and consistent and worst_inverse == 0.0
    return _result(
        "mpifs-operators", start, passed,
        f"{systems} systems: duality residual {worst_dual:.2e} (tol 1e-12), "
        f"three-way checks consistent: {consistent}, inverse-problem residual "
        f"{worst_inverse!r}",
    )


# ---------------------------------------------------------------------------
# 8. Two-symbol large-deviation worked example
# ---------------------------------------------------------------------------


def _partition_bruteforce(p: float, t: float, n: int) -> float:
    """Direct summation over all 2^n cylinders: symbol 2 carries mass p and
    the max-sum is 1 unless the word is all 2s."""
    codes = np.arange(1 << n, dtype=np.uint64)
    count2 = np.bitwise_count(codes).astype(np.int64)  # digit 1 <-> symbol 2
    masses = p ** count2 * (1.0 - p) ** (n - count2)
    maxsum = (count2 < n).astype(float)
    return float((np.exp(-n * t * maxsum) * masses).sum())


def check_ldp_worked_example() -> GoldenResult:
    start = time.time()
    p, b = 0.5, 0.5
    notes = []
    ok = True

    worst_integral = 0.0
    for n in (1, 2, 3, 5, 10, 20):
        for t in (0.0, 0.1, 0.5, np.log(2.0), 2.0):
            closed = dynamics.partition_integral_exact(p, t, n)
            brute = _partition_bruteforce(p, t, n)
            worst_integral = max(worst_integral, abs(closed - brute))
    ok &= worst_integral <= 1e-10
    notes.append(f"cylinder summation gap {worst_integral:.2e} (tol 1e-10)")

    worst_c = 0.0
    for t in (0.05, 0.2, 0.5, 1.0):
        worst_c = max(
            worst_c,
            abs(dynamics.c_n_exact(p, t, 2000) - dynamics.c_limit_exact(p, t)),
        )
    ok &= worst_c <= 0.01
    notes.append(f"c_2000 vs limit gap {worst_c:.2e} (tol 0.01)")

    t_star, bound = dynamics.bernoulli_ldp_bound(p, b)
    t_gap = abs(t_star - (-np.log(p)))
    b_gap = abs(bound - (1 - b) * np.log(p))
    ok &= t_gap <= 1e-8 and b_gap <= 1e-8
    notes.append(f"minimizer gap {t_gap:.2e}, bound gap {b_gap:.2e} (tol 1e-8)")

    est = dynamics.empirical_rate(p, b, [1, 5, 10, 50, 2000])
    rate_gap = max(abs(rate - np.log(p)) for rate in est.rates)
    ok &= rate_gap <= 1e-12
    strict = est.limit_rate < est.ldp_bound - 1e-9
    ok &= strict
    notes.append(
        f"rate gap {rate_gap:.2e}; strict gap log p={est.limit_rate:.5f} < "
        f"bound={est.ldp_bound:.5f}: {strict}"
    )
    return _result("ldp-worked-example", start, bool(ok), "; ".join(notes))


# ---------------------------------------------------------------------------
# 9. Running-max attainment along sampled orbits
# ---------------------------------------------------------------------------


def check_birkhoff_attainment(seed: int = 19) -> GoldenResult:
    start = time.time()
    space = ShiftSpace(2, 0.3)
    sampler = dynamics.OrbitSampler.bernoulli([0.5, 0.5], n_orbits=100, seed=seed)
    f = DepthKFunction(space, 1, [1.0, 0.0])
    rep = dynamics.birkhoff_limit_test(sampler, f, length=10_000)
    passed = rep.attained_fraction == 1.0
    return _result(
        "birkhoff-attainment", start, passed,
        f"100 orbits of length 1e4 all attain sup: {passed}; per-orbit miss "
        f"probability 0.5^10000 (~1e-3011, underflows to "
        f"{rep.miss_probability_estimate!r})",
    )


# ---------------------------------------------------------------------------
# 10. Convex-pressure projection suite
# ---------------------------------------------------------------------------


def check_convex_pressure_suite(seed: int = 20) -> GoldenResult:
    start = time.time()
    notes = []
    ok = True
    grid = simplex.SimplexGrid(2, 2000)

    axioms = simplex.pressure_axioms_check(
        simplex.shannon_entropy_table, grid, trials=12, seed=seed
    )
    ok &= axioms.worst <= 1e-6
    notes.append(f"axiom violations {axioms.worst:.2e} (tol 1e-6)")

    bump = two_bump_density()
    family = simplex.affine_observable_family(2, -6, 6, 241)
    worst_gap = 0.0
    mid_gap = None
    for x in (0.2, 0.35, 0.5, 0.65, 0.8):
        mu = np.array([x, 1 - x])
        recovered = simplex.entropy_recovery(bump, mu, family, grid)
        hm = float(bump(mu[None, :])[0])
        worst_gap = max(worst_gap, hm - recovered)
        if x == 0.5:
            mid_gap = recovered - hm
    ok &= worst_gap <= 1e-6
    notes.append(
        f"density below recovered entropy within {worst_gap:.2e} (tol 1e-6), "
        f"midpoint concavification gap {mid_gap:.3f}"
    )

    mu = np.array([np.e / (1 + np.e), 1 / (1 + np.e)])
    fam_with_min = list(family) + [simplex.shannon_recovery_minimizer(mu)]
    rec = simplex.entropy_recovery(
        simplex.shannon_entropy_table, mu, fam_with_min, grid
    )
    gap = abs(rec - simplex.shannon_entropy(mu))
    ok &= gap <= 1e-4
    notes.append(f"Shannon recovery gap {gap:.2e} (tol 1e-4)")

    # a non-concave density and its concave envelope project identically
    xs = np.linspace(0.0, 1.0, 2001)
    pts = np.column_stack([xs, 1 - xs])
    vals = bump(pts)
    env = simplex.concave_envelope_1d(xs, vals)
    worst_env = 0.0
    rng = np.random.default_rng(seed + 1)
    for _ in range(25):
        phi = rng.uniform(-3, 3, 2)
        lin = pts @ phi
        worst_env = max(worst_env, abs((vals + lin).max() - (env + lin).max()))
    ok &= worst_env <= 1e-6
    notes.append(f"envelope projection gap {worst_env:.2e} (tol 1e-6)")

    return _result("convex-pressure-suite", start, bool(ok), "; ".join(notes))


# ---------------------------------------------------------------------------
# 11. Quadratic nonlinear pressure: symmetric non-unique equilibria
# ---------------------------------------------------------------------------


def check_nonlinear_quadratic() -> GoldenResult:
    start = time.time()
    spec = simplex.NonlinearSpec(
        F=lambda x: 2.0 * x ** 2, A=simplex.Level1Observable((1.0, -1.0))
    )
    family = simplex.BernoulliFamily(simplex.SimplexGrid(2, 2000))
    res = simplex.nonlinear_pressure(spec, family, argmax_tol=1e-6)
    points = res.argmax
    two = len(points) >= 2
    swapped = two and bool(np.abs(points[0] - points[1][::-1]).max() <= 1e-3)
    off_uniform = bool(all(abs(p[0] - 0.5) > 0.4 for p in points))

    # non-convexity: the midpoint of the equilibria (the uniform measure)
    # scores strictly below the maximum
    uniform = np.array([[0.5, 0.5]])
    mid_val = simplex.shannon_entropy_table(uniform)[0] + 2.0 * float(
        (uniform @ spec.A.array()) ** 2
    )
    non_convex = mid_val < res.value - 0.1

    passed = two and swapped and off_uniform and non_convex
    return _result(
        "nonlinear-quadratic", start, passed,
        f"{len(points)} equilibria, swap-symmetric: {swapped}, away from "
        f"uniform: {off_uniform}, midpoint value {mid_val:.4f} < max "
        f"{res.value:.4f}: {non_convex}",
    )


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------


ALL_CHECKS: Dict[str, Callable[[], GoldenResult]] = {
    "gibbs-equilibrium": check_gibbs_equilibrium,
    "transport-oracle": check_transport_oracle,
    "contraction-bounds": check_contraction_bounds,
    "section-identity": check_section_identity,
    "product-formula": check_product_formula,
    "ifs-invariant-pressure": check_ifs_invariant_pressure,
    "mpifs-operators": check_mpifs_operators,
    "ldp-worked-example": check_ldp_worked_example,
    "birkhoff-attainment": check_birkhoff_attainment,
    "convex-pressure-suite": check_convex_pressure_suite,
    "nonlinear-quadratic": check_nonlinear_quadratic,
}


def run_all(names: Optional[Sequence[str]] = None) -> List[GoldenResult]:
    selected = list(ALL_CHECKS) if names is None else list(names)
    results = []
    for name in selected:
        if name not in ALL_CHECKS:
            raise KeyError(f"unknown check {name!r}; known: {sorted(ALL_CHECKS)}")
        results.append(ALL_CHECKS[name]())
    return results
