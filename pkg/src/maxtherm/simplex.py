"""Pressure on the probability simplex of a finite alphabet.

Observables come in two levels: vectors g in R^d act on alphabet symbols,
and their inclusion j(g) acts on probability vectors by integration
j(g)(p) = sum_j g_j p_j.  Pressures of densities on the simplex are
computed by a coarse lattice scan followed by local refinement, which
handles non-concave objectives whose maximizer set may be disconnected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

ZERO_MASS = 1e-15  # masses below this are exact zeros for entropy terms


def as_prob_vector(masses) -> np.ndarray:
    """Validate and return a probability vector as a float array."""
    p = np.asarray(masses, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("probability vector must be a nonempty 1-D array")
    if (p < -1e-12).any() or (p > 1 + 1e-12).any():
        raise ValueError("masses must lie in [0, 1]")
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError(f"masses sum to {p.sum()!r}, not 1")
    return np.clip(p, 0.0, 1.0)


def shannon_entropy(p) -> float:
    """Shannon entropy -sum p log p in nats, with 0 log 0 = 0."""
    p = as_prob_vector(p)
    pos = p[p > ZERO_MASS]
    return float(-(pos * np.log(pos)).sum())


def shannon_entropy_table(points: np.ndarray) -> np.ndarray:
    """Row-wise Shannon entropy of an (N, d) array of probability vectors."""
    pts = np.asarray(points, dtype=float)
    safe = np.where(pts > ZERO_MASS, pts, 1.0)
    return -(np.where(pts > ZERO_MASS, pts * np.log(safe), 0.0)).sum(axis=1)


@dataclass(frozen=True)
class Level1Observable:
    """A vector of coefficients, i.e. a function on the alphabet {1..d}."""

    coeffs: Tuple[float, ...]

    def __init__(self, coeffs):
        arr = np.asarray(coeffs, dtype=float)
        if not np.isfinite(arr).all():
            raise ValueError("level-1 observable must have finite entries")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in arr))

    @property
    def d(self) -> int:
        return len(self.coeffs)

    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float)


class Level2Observable:
    """A function on the simplex, evaluated row-wise on (N, d) arrays."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], label: str = ""):
        self._fn = fn
        self.label = label

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.asarray(self._fn(pts), dtype=float)
        return out

    def at(self, p) -> float:
        return float(self(np.atleast_2d(p))[0])


def inclusion_j(phi: Level1Observable) -> Level2Observable:
    """Embed a level-1 observable as integration: p -> sum_j phi_j p_j."""
    coeffs = phi.array()
    return Level2Observable(lambda pts: pts @ coeffs, label=f"j{phi.coeffs}")


def gibbs_solution(g: Level1Observable) -> np.ndarray:
    """The softmax vector e^{g_j} / sum_k e^{g_k}.

    This is the unique maximizer of Shannon entropy + j(g), and the
    pressure value there is log sum_k e^{g_k}.
    """
    a = g.array()
    w = np.exp(a - a.max())
    return w / w.sum()


def log_sum_exp(g: Level1Observable) -> float:
    a = g.array()
    m = a.max()
    return float(m + np.log(np.exp(a - m).sum()))


# ---------------------------------------------------------------------------
# Simplex lattice + local refinement search
# ---------------------------------------------------------------------------


def _compositions(m: int, d: int) -> np.ndarray:
    """All length-d tuples of nonnegative ints summing to m, lexicographic."""
    if d == 1:
        return np.array([[m]], dtype=np.int64)
    rows = []
    for first in range(m + 1):
        rest = _compositions(m - first, d - 1)
        block = np.empty((rest.shape[0], d), dtype=np.int64)
        block[:, 0] = first
        block[:, 1:] = rest
        rows.append(block)
    return np.vstack(rows)


@dataclass(frozen=True)
class SimplexGrid:
    """Lattice of probability vectors with masses in multiples of 1/m.

    ``refine_rounds`` and ``shrink`` configure the local refinement used by
    :func:`maximize_on_simplex`: around each surviving candidate a box of
    half-width one lattice cell is rescanned, shrinking by ``shrink`` per
    round.
    """

    d: int
    m: int
    refine_rounds: int = 6
    shrink: float = 0.2

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("simplex dimension d must be >= 2")
        if self.m < 1:
            raise ValueError("grid resolution m must be >= 1")
        if not (0.0 < self.shrink < 1.0):
            raise ValueError("shrink factor must be in (0, 1)")

    def points(self) -> np.ndarray:
        return _compositions(self.m, self.d) / float(self.m)

    def __len__(self) -> int:
        from math import comb

        return comb(self.m + self.d - 1, self.d - 1)


def _local_patch(center: np.ndarray, width: float, d: int, n_axis: int) -> np.ndarray:
    """Lattice patch of the simplex around ``center`` with half-width ``width``.

    The first d-1 coordinates are free; the last is 1 - sum and rows that
    would make it negative are dropped.
    """
    axes = [
        np.linspace(max(0.0, c - width), min(1.0, c + width), n_axis)
        for c in center[: d - 1]
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    free = np.column_stack([m.ravel() for m in mesh])
    last = 1.0 - free.sum(axis=1)
    keep = last >= -1e-12
    pts = np.column_stack([free[keep], np.clip(last[keep], 0.0, 1.0)])
    return pts


def _spread_candidates(
    points: np.ndarray, values: np.ndarray, k: int, min_sep: float
) -> List[int]:
    """Pick up to k high-value indices pairwise separated in sup norm.

    Plain top-k would pile every candidate onto the same bump; the
    separation keeps distinct near-maximizers alive for refinement.
    """
    order = np.argsort(values)[::-1]
    chosen: List[int] = []
    for i in order:
        if not np.isfinite(values[i]):
            continue
        if all(
            np.max(np.abs(points[i] - points[j])) >= min_sep for j in chosen
        ):
            chosen.append(int(i))
        if len(chosen) == k:
            break
    return chosen


@dataclass
class SimplexMax:
    value: float
    argmax: np.ndarray          # (k, d) all near-maximizers found
    evaluations: int = 0


def maximize_on_simplex(
    objective: Callable[[np.ndarray], np.ndarray],
    grid: SimplexGrid,
    top_k: int = 8,
    argmax_tol: float = 1e-9,
    dedup_tol: float = 1e-6,
) -> SimplexMax:
    """Maximize a row-wise objective over the simplex.

    Coarse lattice scan, then ``grid.refine_rounds`` rounds of local
    rescans around the ``top_k`` spread-out candidates.  The incumbent
    point is carried into every local patch, so the result can never fall
    below the coarse-grid max.  Returns all refined candidates within
    ``argmax_tol`` of the best, deduplicated at ``dedup_tol``.
    """
    pts = grid.points()
    vals = np.asarray(objective(pts), dtype=float)
    n_eval = len(vals)
    cand_idx = _spread_candidates(pts, vals, top_k, min_sep=2.5 / grid.m)
    if not cand_idx:
        raise ValueError("objective is -inf on the whole grid")

    n_axis = 9
    finals: List[Tuple[np.ndarray, float]] = []
    for i in cand_idx:
        center, best = pts[i].copy(), float(vals[i])
        width = 1.0 / grid.m
        for _ in range(grid.refine_rounds):
            patch = _local_patch(center, width, grid.d, n_axis)
            patch = np.vstack([patch, center[None, :]])
            pv = np.asarray(objective(patch), dtype=float)
            n_eval += len(pv)
            j = int(np.argmax(pv))
            if pv[j] > best:
                center, best = patch[j].copy(), float(pv[j])
            width *= grid.shrink
        finals.append((center, best))

    top = max(v for _, v in finals)
    near = [(p, v) for p, v in finals if v >= top - argmax_tol]
    near.sort(key=lambda t: -t[1])
    argmax: List[np.ndarray] = []
    for p, _ in near:
        if all(np.max(np.abs(p - q)) > dedup_tol for q in argmax):
            argmax.append(p)
    return SimplexMax(value=top, argmax=np.array(argmax), evaluations=n_eval)


# ---------------------------------------------------------------------------
# Level-2 pressure and the convex-pressure projection
# ---------------------------------------------------------------------------


def level2_pressure(
    h: Callable[[np.ndarray], np.ndarray],
    g: Level2Observable,
    grid: SimplexGrid,
    argmax_tol: float = 1e-9,
) -> SimplexMax:
    """max over the simplex of h(p) + g(p) with the equilibrium set.

    h is a density table evaluator: row-wise over (N, d) points, -inf
    allowed outside its support.  The returned set of near-maximizers may
    have several elements and need not be convex.
    """

    def obj(pts: np.ndarray) -> np.ndarray:
        return np.asarray(h(pts), dtype=float) + g(pts)

    return maximize_on_simplex(obj, grid, argmax_tol=argmax_tol)


def convex_pressure_gamma(
    h: Callable[[np.ndarray], np.ndarray],
    phi: Level1Observable,
    grid: SimplexGrid,
) -> float:
    """The level-1 projection: pressure of the included observable j(phi)."""
    return level2_pressure(h, inclusion_j(phi), grid).value


@dataclass
class PressureAxiomsReport:
    """Worst violations of monotonicity, translation invariance, convexity."""

    monotonicity: float
    translation: float
    convexity: float
    trials: int

    @property
    def worst(self) -> float:
        return max(self.monotonicity, self.translation, self.convexity)


def pressure_axioms_check(
    h: Callable[[np.ndarray], np.ndarray],
    grid: SimplexGrid,
    trials: int = 20,
    seed: int = 0,
    coeff_scale: float = 2.0,
) -> PressureAxiomsReport:
    """Property-check the three convex-pressure axioms on random observables.

    Violations are bounded by the grid error of the maximization, so they
    must be small but need not be exactly zero.
    """
    rng = np.random.default_rng(seed)
    worst_mono = worst_trans = worst_conv = 0.0
    for _ in range(trials):
        a = rng.uniform(-coeff_scale, coeff_scale, grid.d)
        b = rng.uniform(-coeff_scale, coeff_scale, grid.d)
        phi, psi = Level1Observable(a), Level1Observable(b)
        gam_phi = convex_pressure_gamma(h, phi, grid)
        gam_psi = convex_pressure_gamma(h, psi, grid)

        bigger = Level1Observable(a + np.abs(rng.uniform(0, 1, grid.d)))
        worst_mono = max(worst_mono, gam_phi - convex_pressure_gamma(h, bigger, grid))

        c = float(rng.uniform(-3, 3))
        shifted = convex_pressure_gamma(h, Level1Observable(a + c), grid)
        worst_trans = max(worst_trans, abs(shifted - gam_phi - c))

        t = float(rng.uniform(0, 1))
        mix = convex_pressure_gamma(h, Level1Observable(t * a + (1 - t) * b), grid)
        worst_conv = max(worst_conv, mix - t * gam_phi - (1 - t) * gam_psi)
    return PressureAxiomsReport(worst_mono, worst_trans, worst_conv, trials)


def affine_observable_family(
    d: int, lo: float = -6.0, hi: float = 6.0, num: int = 241
) -> List[Level1Observable]:
    """Coefficient grid of observables with last coordinate pinned to 0.

    Translation invariance makes the pinned coordinate harmless: adding a
    constant changes the recovered value by nothing.
    """
    if d == 2:
        return [Level1Observable((a, 0.0)) for a in np.linspace(lo, hi, num)]
    per_axis = max(3, int(round(num ** (1.0 / (d - 1)))))
    axes = [np.linspace(lo, hi, per_axis)] * (d - 1)
    mesh = np.meshgrid(*axes, indexing="ij")
    free = np.column_stack([m.ravel() for m in mesh])
    return [Level1Observable(tuple(row) + (0.0,)) for row in free]


def shannon_recovery_minimizer(mu) -> Level1Observable:
    """The analytic minimizer log mu for recovering Shannon entropy."""
    p = as_prob_vector(mu)
    if (p <= ZERO_MASS).any():
        raise ValueError("analytic minimizer needs strictly positive masses")
    return Level1Observable(np.log(p))


def entropy_recovery(
    h: Callable[[np.ndarray], np.ndarray],
    mu,
    phi_family: Sequence[Level1Observable],
    grid: SimplexGrid,
) -> float:
    """Recover the concave entropy bound at mu from the pressure projection.

    Returns min over the family of Gamma(phi) - integral of phi d(mu).
    This is an upper approximation that decreases as the family grows; it
    majorizes h(mu) whenever mu is one of the scanned lattice points.
    """
    p = as_prob_vector(mu)
    best = np.inf
    for phi in phi_family:
        val = convex_pressure_gamma(h, phi, grid) - float(phi.array() @ p)
        best = min(best, val)
    return float(best)


def concave_density_identity(
    h: Callable[[np.ndarray], np.ndarray],
    mu,
    g_family: Sequence[Level2Observable],
    grid: SimplexGrid,
) -> float:
    """min over level-2 observables of l(g) - g(mu), for concave densities.

    For u.s.c. concave h this recovers h(mu) in the limit of a rich
    family; with a finite family it is a decreasing upper bound.
    """
    p = np.atleast_2d(as_prob_vector(mu))
    best = np.inf
    for g in g_family:
        val = level2_pressure(h, g, grid).value - float(g(p)[0])
        best = min(best, val)
    return float(best)


def concave_envelope_1d(xs: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Upper concave envelope of finite values tabulated on a 1-D grid.

    Computed as the upper convex hull of the graph, then interpolated back
    onto the grid.  Only d=2 simplices reduce to this 1-D case.
    """
    xs = np.asarray(xs, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if xs.ndim != 1 or xs.shape != vals.shape:
        raise ValueError("xs and vals must be equal-length 1-D arrays")
    if not np.isfinite(vals).all():
        raise ValueError("envelope needs finite values")
    order = np.argsort(xs)
    hull: List[Tuple[float, float]] = []
    for i in order:
        x, y = float(xs[i]), float(vals[i])
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append((x, y))
    hx = np.array([p[0] for p in hull])
    hy = np.array([p[1] for p in hull])
    return np.interp(xs, hx, hy)


# ---------------------------------------------------------------------------
# Nonlinear pressure over parametrized measure families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NonlinearSpec:
    """A scalar transform F applied to the integral of a potential A."""

    F: Callable[[np.ndarray], np.ndarray]
    A: Level1Observable


class BernoulliFamily:
    """Bernoulli measures on {1..d}: KS entropy is the Shannon entropy."""

    def __init__(self, grid: SimplexGrid):
        self.grid = grid
        self.d = grid.d

    def maximize(self, spec: NonlinearSpec, argmax_tol: float = 1e-9) -> SimplexMax:
        coeffs = spec.A.array()
        if len(coeffs) != self.d:
            raise ValueError("potential dimension does not match the family")

        def obj(pts: np.ndarray) -> np.ndarray:
            x = pts @ coeffs
            fx = np.asarray(spec.F(x), dtype=float)
            if not np.isfinite(fx).all():
                raise ValueError("nonlinear transform is not finite on the range")
            return shannon_entropy_table(pts) + fx

        return maximize_on_simplex(obj, self.grid, argmax_tol=argmax_tol)


class MarkovFamily:
    """One-step Markov measures on {1, 2}, parametrized by the two rows.

    Parameters (a, b) are the transition probabilities 1->1 and 2->1; the
    KS entropy is the stationary average of the row entropies.
    """

    def __init__(self, resolution: int = 60, refine_rounds: int = 6, shrink: float = 0.2):
        self.resolution = resolution
        self.refine_rounds = refine_rounds
        self.shrink = shrink

    @staticmethod
    def stationary(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        den = 1.0 - a + b
        pi1 = np.where(np.abs(den) > 1e-12, b / np.where(den == 0, 1.0, den), 0.5)
        return np.column_stack([pi1, 1.0 - pi1])

    @classmethod
    def ks_entropy(cls, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        pi = cls.stationary(a, b)
        rows = np.column_stack(
            [shannon_entropy_table(np.column_stack([a, 1 - a])),
             shannon_entropy_table(np.column_stack([b, 1 - b]))]
        )
        return (pi * rows).sum(axis=1)

    def maximize(self, spec: NonlinearSpec, argmax_tol: float = 1e-9) -> SimplexMax:
        coeffs = spec.A.array()
        if len(coeffs) != 2:
            raise ValueError("Markov family is implemented for d=2 potentials")

        def obj(params: np.ndarray) -> np.ndarray:
            a, b = params[:, 0], params[:, 1]
            pi = self.stationary(a, b)
            x = pi @ coeffs
            fx = np.asarray(spec.F(x), dtype=float)
            if not np.isfinite(fx).all():
                raise ValueError("nonlinear transform is not finite on the range")
            return self.ks_entropy(a, b) + fx

        # coarse scan of the unit square, then shrinking local patches
        axis = np.linspace(0.0, 1.0, self.resolution + 1)
        mesh = np.meshgrid(axis, axis, indexing="ij")
        pts = np.column_stack([m.ravel() for m in mesh])
        vals = obj(pts)
        cand = _spread_candidates(pts, vals, 8, min_sep=2.5 / self.resolution)
        finals = []
        for i in cand:
            center, best = pts[i].copy(), float(vals[i])
            width = 1.0 / self.resolution
            for _ in range(self.refine_rounds):
                axes = [
                    np.linspace(max(0.0, c - width), min(1.0, c + width), 9)
                    for c in center
                ]
                mg = np.meshgrid(*axes, indexing="ij")
                patch = np.column_stack([m.ravel() for m in mg])
                patch = np.vstack([patch, center[None, :]])
                pv = obj(patch)
                j = int(np.argmax(pv))
                if pv[j] > best:
                    center, best = patch[j].copy(), float(pv[j])
                width *= self.shrink
            finals.append((center, best))
        top = max(v for _, v in finals)
        near = [(p, v) for p, v in finals if v >= top - argmax_tol]
        near.sort(key=lambda t: -t[1])
        argmax: List[np.ndarray] = []
        for p, _ in near:
            if all(np.max(np.abs(p - q)) > 1e-6 for q in argmax):
                argmax.append(p)
        return SimplexMax(value=top, argmax=np.array(argmax))


def nonlinear_pressure(
    spec: NonlinearSpec, family, argmax_tol: float = 1e-9
) -> SimplexMax:
    """Maximize KS entropy + F(integral of A) over a measure family."""
    return family.maximize(spec, argmax_tol=argmax_tol)
