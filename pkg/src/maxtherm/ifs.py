"""Invariant pressures from contractive families of dual transfer operators.

A finite family of normalized kernels with nonpositive weights (max weight
0) drives an iterated function system on the space of probabilities: every
length-N word of kernel indices produces a composition image of a seed
measure, and the density entropy at a measure is the best cumulative
weight among words whose images land near it.  Because each dual operator
contracts W1 by r = (d+1) gamma, images of words sharing a prefix of
length k agree to within r^k, so a truncated enumeration with cluster
merging approximates the attractor with a computable error.

The second half of the module is the combinatorial max-plus IFS: a finite
point set, one map per index, and normalized nonpositive weights, with the
composition operator on observables, the transfer operator on densities,
and the induced operator on pressures, which are mutually dual.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .semiring import BOTTOM, DensitySample, IdempotentPressure, MaxPlus
from .shift import CylinderMeasure, Jacobian, ShiftSpace, dual_apply
from .transport import w1_tree

NORMALIZATION_TOL = 1e-12


# ---------------------------------------------------------------------------
# Weighted kernel families and their attractor
# ---------------------------------------------------------------------------


class WeightedJacobianFamily:
    """Finitely many kernels with nonpositive weights whose max is 0."""

    def __init__(self, jacobians: Sequence[Jacobian], weights):
        if not jacobians:
            raise ValueError("family must contain at least one kernel")
        space = jacobians[0].space
        if any(J.space != space for J in jacobians):
            raise ValueError("all kernels must share one space")
        w = np.asarray(weights, dtype=float)
        if w.size != len(jacobians):
            raise ValueError("one weight per kernel required")
        if (w > NORMALIZATION_TOL).any():
            raise ValueError("weights must be <= 0")
        if abs(w.max()) > NORMALIZATION_TOL:
            raise ValueError("the largest weight must be 0")
        self.jacobians = list(jacobians)
        self.weights = np.minimum(w, 0.0)
        self.space = space

    def __len__(self) -> int:
        return len(self.jacobians)

    @property
    def contraction_rate(self) -> float:
        return self.space.contraction_rate


@dataclass
class AttractorLeaf:
    word: Tuple[int, ...]          # kernel indices 1..m, outermost first
    measure: CylinderMeasure
    weight: float                  # cumulative weight, best in its cluster
    radius: float = 0.0            # max W1 from the representative measure
    merged: int = 1                # number of raw words in the cluster


@dataclass
class AttractorSample:
    leaves: List[AttractorLeaf]
    epsilon: float
    rate: float
    word_length: int
    raw_count: int
    pruned_count: int
    prune_floor: Optional[float]

    def max_weight_leaf(self) -> AttractorLeaf:
        return max(self.leaves, key=lambda leaf: leaf.weight)

    def to_json(self) -> str:
        import json

        return json.dumps(
            {
                "words": [list(l.word) for l in self.leaves],
                "weights": [l.weight for l in self.leaves],
                "measure_refs": list(range(len(self.leaves))),
                "measures": [
                    {
                        "d": l.measure.space.d,
                        "gamma": l.measure.space.gamma,
                        "depth": l.measure.depth,
                        "masses": [float(x) for x in l.measure.masses],
                    }
                    for l in self.leaves
                ],
                "epsilon": self.epsilon,
                "N": self.word_length,
                "r": self.rate,
            }
        )


def attractor_build(
    fam: WeightedJacobianFamily,
    word_length: int,
    nu0: CylinderMeasure,
    eps: Optional[float] = None,
    prune_floor: Optional[float] = None,
    max_words: int = 1 << 17,
) -> AttractorSample:
    """Enumerate all composition images of length ``word_length``.

    Suffix compositions are shared across words, so the enumeration costs
    about m^(N+1)/(m-1) dual applications instead of N m^N.  Leaves are
    merged greedily in word order: a leaf joins the first existing cluster
    within W1 <= eps, and the cluster keeps the max weight.  eps defaults
    to max(r^N, gamma^final_depth), the resolution below which distinct
    clusters are not meaningful.  Passing eps=0.0 disables merging,
    yielding the exact m^N enumeration (the reference behavior).

    Branches whose cumulative weight drops below ``prune_floor`` are cut;
    pruning is off by default.
    """
    m = len(fam)
    if word_length < 1:
        raise ValueError("word length must be >= 1")
    if m ** word_length > max_words:
        import math

        suggestion = int(math.log(max_words) / math.log(m))
        raise ValueError(
            f"{m}^{word_length} words exceed the budget {max_words}; "
            f"use word_length <= {suggestion}"
        )
    r = fam.contraction_rate
    final_depth = nu0.depth + word_length
    if eps is None:
        eps = max(r ** word_length, fam.space.gamma ** final_depth)

    # grow suffixes: after t steps every length-t suffix has been applied
    suffixes: List[Tuple[Tuple[int, ...], float, CylinderMeasure]] = [((), 0.0, nu0)]
    pruned = 0
    for _ in range(word_length):
        nxt: List[Tuple[Tuple[int, ...], float, CylinderMeasure]] = []
        for word, weight, rho in suffixes:
            for i in range(m):
                w2 = weight + fam.weights[i]
                if prune_floor is not None and w2 < prune_floor:
                    pruned += 1
                    continue
                nxt.append(((i + 1,) + word, w2, dual_apply(fam.jacobians[i], rho)))
        suffixes = nxt
    raw = len(suffixes)

    leaves: List[AttractorLeaf] = []
    if eps > 0.0:
        for word, weight, rho in suffixes:
            for leaf in leaves:
                dist = w1_tree(rho, leaf.measure)
                if dist <= eps:
                    leaf.weight = max(leaf.weight, weight)
                    leaf.radius = max(leaf.radius, dist)
                    leaf.merged += 1
                    break
            else:
                leaves.append(AttractorLeaf(word, rho, weight))
    else:
        leaves = [AttractorLeaf(w, rho, wt) for w, wt, rho in suffixes]

    return AttractorSample(
        leaves=leaves,
        epsilon=eps,
        rate=r,
        word_length=word_length,
        raw_count=raw,
        pruned_count=pruned,
        prune_floor=prune_floor,
    )


@dataclass
class DensityEstimate:
    """Truncated density entropy at a measure, with its approximation slack.

    ``value`` is the best truncated weight among leaves within eps of the
    target.  Truncated weights upper-bound every infinite extension, and
    padding a word with a zero-weight kernel realizes the same weight
    while moving the image by at most ``w1_margin``.
    """

    value: MaxPlus
    w1_margin: float
    matched: int


def density_entropy_estimate(
    sample: AttractorSample, mu: CylinderMeasure
) -> DensityEstimate:
    """Best cumulative weight among leaves within eps of ``mu`` (else bottom)."""
    margin = sample.rate ** sample.word_length / (1.0 - sample.rate)
    best = BOTTOM
    matched = 0
    for leaf in sample.leaves:
        if leaf.measure.depth != mu.depth:
            raise ValueError(
                "target depth differs from the sample leaves; bring the "
                "measure to the same depth first"
            )
        if w1_tree(leaf.measure, mu) <= sample.epsilon:
            matched += 1
            if best.is_bottom or leaf.weight > best.value:
                best = MaxPlus(leaf.weight)
    return DensityEstimate(value=best, w1_margin=margin, matched=matched)


@dataclass
class InvariantPressure:
    value: float
    error_bound: float
    fixed_point_residual: float


def invariant_pressure_solve(
    fam: WeightedJacobianFamily,
    g: Callable[[CylinderMeasure], float],
    word_length: int,
    nu0: CylinderMeasure,
    lip_g: float = 1.0,
    eps: Optional[float] = None,
) -> InvariantPressure:
    """Pressure of g for the unique normalized invariant pressure function.

    The value is the max over enumerated words of cumulative weight plus
    g at the image measure, with error at most lip_g * r^N / (1 - r).  As
    an a-posteriori check the operator fixed-point identity is re-evaluated
    on the sample: max over kernels of weight + pressure(g after that
    kernel) must reproduce the value within the same bound.
    """
    sample = attractor_build(fam, word_length, nu0, eps=eps)
    r = fam.contraction_rate
    bound = lip_g * r ** word_length / (1.0 - r)

    def pressure_of(fn: Callable[[CylinderMeasure], float]) -> float:
        return max(leaf.weight + fn(leaf.measure) for leaf in sample.leaves)

    value = pressure_of(g)
    reapplied = max(
        fam.weights[i]
        + pressure_of(lambda rho, J=fam.jacobians[i]: g(dual_apply(J, rho)))
        for i in range(len(fam))
    )
    return InvariantPressure(
        value=float(value),
        error_bound=float(bound),
        fixed_point_residual=float(abs(reapplied - value)),
    )


# ---------------------------------------------------------------------------
# Pushforward invariance on finite simplex grids
# ---------------------------------------------------------------------------


@dataclass
class PushforwardReport:
    functional_residual: float
    density_residual: float
    witness: Optional[str]

    @property
    def invariant(self) -> bool:
        return self.functional_residual <= 1e-9 and self.density_residual <= 1e-9


def pushforward_invariance_check(
    points: np.ndarray,
    h_values: np.ndarray,
    symbol_map: Sequence[int],
    observables: Sequence[Callable[[np.ndarray], np.ndarray]],
) -> PushforwardReport:
    """Check pushforward invariance of the pressure with density h.

    ``points`` is a finite grid of probability vectors closed under the
    pushforward of the symbol map T (T acts on {1..d}; the pushforward
    sends mass of i to T(i)).  Checks that the pressure of g composed with
    the pushforward equals the pressure of g for every test observable,
    and that the density satisfies the fiber-sup characterization: h at a
    grid point in the image equals the sup of h over its preimages, and h
    is -inf off the image.
    """
    pts = np.asarray(points, dtype=float)
    h = np.asarray(h_values, dtype=float)
    n, d = pts.shape
    T = list(symbol_map)
    if len(T) != d:
        raise ValueError("symbol map must assign a target to each symbol")

    # pushforward matrix: (T# p)_j = sum of p_i over i with T(i) = j
    push = np.zeros((n, d))
    for i, t in enumerate(T):
        if not 1 <= t <= d:
            raise ValueError("symbol map targets must lie in 1..d")
        push[:, t - 1] += pts[:, i]

    # match pushed points back onto the grid
    index: Dict[Tuple[int, ...], int] = {
        tuple(np.round(p * 1e9).astype(np.int64)): i for i, p in enumerate(pts)
    }
    sigma = np.empty(n, dtype=np.int64)
    for i in range(n):
        key = tuple(np.round(push[i] * 1e9).astype(np.int64))
        if key not in index:
            raise ValueError(
                f"grid is not closed under the pushforward: image of point "
                f"{i} is missing"
            )
        sigma[i] = index[key]

    worst_fn = 0.0
    witness = None
    for k, g in enumerate(observables):
        gv = np.asarray(g(pts), dtype=float)
        lhs = np.max(h + gv[sigma])   # pressure of g after the pushforward
        rhs = np.max(h + gv)
        if abs(lhs - rhs) > worst_fn:
            worst_fn = abs(lhs - rhs)
            witness = f"observable #{k}"

    # fiber characterization: h at an image point = sup of h over preimages,
    # and -inf off the image (h_fiber starts at -inf, so off-image stays there)
    h_fiber = np.full(n, -np.inf)
    np.maximum.at(h_fiber, sigma, h)
    worst_dens = _inf_aware_gap(h, h_fiber)
    return PushforwardReport(worst_fn, worst_dens, witness if worst_fn > 1e-9 else None)


# ---------------------------------------------------------------------------
# Max-plus IFS on a finite point set
# ---------------------------------------------------------------------------


class MpIFSSystem:
    """Finite max-plus IFS: maps phi[index, point] and weights q[index, point].

    Weights are nonpositive and normalized per point over the index:
    max over indices of q[index, point] = 0 for every point.
    """

    def __init__(self, maps: np.ndarray, weights: np.ndarray):
        maps = np.asarray(maps, dtype=np.int64)
        q = np.asarray(weights, dtype=float)
        if maps.ndim != 2 or q.shape != maps.shape:
            raise ValueError("maps and weights must be equal-shape 2-D tables")
        self.n_maps, self.n_points = maps.shape
        if maps.min() < 0 or maps.max() >= self.n_points:
            raise ValueError("map targets must be point indices")
        if (q > NORMALIZATION_TOL).any():
            raise ValueError("weights must be <= 0")
        col_max = q.max(axis=0)
        if np.abs(col_max).max() > NORMALIZATION_TOL:
            raise ValueError("weights must satisfy max over maps = 0 per point")
        self.maps = maps
        self.weights = np.minimum(q, 0.0)

    @classmethod
    def constant_maps(cls, weights: np.ndarray) -> "MpIFSSystem":
        """One map per point, each sending everything to its own point."""
        q = np.asarray(weights, dtype=float)
        n = q.shape[1]
        if q.shape[0] != n:
            raise ValueError("constant-map systems need a square weight table")
        maps = np.repeat(np.arange(n)[:, None], n, axis=1)
        return cls(maps, q)


def mpifs_ruelle(f: np.ndarray, sys: MpIFSSystem) -> np.ndarray:
    """Composition operator: (Lf)(p) = max over maps of q[m, p] + f(phi[m, p])."""
    f = np.asarray(f, dtype=float)
    scores = sys.weights + f[sys.maps]
    return scores.max(axis=0)


def mpifs_transfer(lam: np.ndarray, sys: MpIFSSystem) -> np.ndarray:
    """Transfer operator on densities: max over preimage pairs, -inf off image."""
    lam = np.asarray(lam, dtype=float)
    out = np.full(sys.n_points, -np.inf)
    for m in range(sys.n_maps):
        targets = sys.maps[m]
        scores = sys.weights[m] + lam
        np.maximum.at(out, targets, scores)
    return out


def mpifs_pressure(lam: np.ndarray, f: np.ndarray) -> float:
    """Pressure of f for the density lam: max of lam + f."""
    return float(np.max(np.asarray(lam, dtype=float) + np.asarray(f, dtype=float)))


def mpifs_markov(lam: np.ndarray, f: np.ndarray, sys: MpIFSSystem) -> float:
    """The pressure-level operator evaluated directly from its definition:
    max over maps of pressure of (q[m] + f after phi[m])."""
    lam = np.asarray(lam, dtype=float)
    f = np.asarray(f, dtype=float)
    best = -np.inf
    for m in range(sys.n_maps):
        best = max(best, float(np.max(lam + (sys.weights[m] + f[sys.maps[m]]))))
    return best


def spike_family(n_points: int, floor: float = -1e8, extra: int = 5,
                 seed: int = 0) -> List[np.ndarray]:
    """Per-point spike observables plus a few smooth random ones.

    Spikes make the functional-level invariance checks separate points:
    the pressure of a spike at p reads off the density at p.
    """
    rng = np.random.default_rng(seed)
    fams = []
    for i in range(n_points):
        f = np.full(n_points, floor)
        f[i] = 0.0
        fams.append(f)
    for _ in range(extra):
        fams.append(rng.uniform(-2, 2, n_points))
    return fams


@dataclass
class InvarianceReport:
    markov_residual: float     # pressure-operator fixed point, on the family
    transfer_residual: float   # density fixed point, pointwise
    ruelle_residual: float     # pressure of composed observables, on the family

    def passes(self, tol: float = 1e-12) -> Tuple[bool, bool, bool]:
        return (
            self.markov_residual <= tol,
            self.transfer_residual <= tol,
            self.ruelle_residual <= tol,
        )

    def consistent(self, tol: float = 1e-12) -> bool:
        p = self.passes(tol)
        return all(p) or not any(p)


def _inf_aware_gap(a: np.ndarray, b: np.ndarray) -> float:
    both_bottom = np.isneginf(a) & np.isneginf(b)
    with np.errstate(invalid="ignore"):
        diff = np.where(both_bottom, 0.0, np.abs(a - b))
    return float(np.max(np.where(np.isnan(diff), np.inf, diff)))


def mpifs_invariance_check(
    lam: np.ndarray,
    sys: MpIFSSystem,
    f_family: Optional[Sequence[np.ndarray]] = None,
) -> InvarianceReport:
    """Evaluate the three equivalent invariance conditions of a density.

    On finite systems with a separating observable family the three
    residuals pass or fail together; disagreement indicates a bug.
    """
    lam = np.asarray(lam, dtype=float)
    if f_family is None:
        f_family = spike_family(sys.n_points)

    transferred = mpifs_transfer(lam, sys)
    transfer_residual = _inf_aware_gap(transferred, lam)

    markov_residual = 0.0
    ruelle_residual = 0.0
    for f in f_family:
        f = np.asarray(f, dtype=float)
        base = mpifs_pressure(lam, f)
        markov_residual = max(markov_residual, abs(mpifs_markov(lam, f, sys) - base))
        composed = mpifs_pressure(lam, mpifs_ruelle(f, sys))
        ruelle_residual = max(ruelle_residual, abs(composed - base))
    return InvarianceReport(markov_residual, transfer_residual, ruelle_residual)


def mpifs_fixed_density(
    sys: MpIFSSystem, polish_iter: int = 50
) -> Tuple[np.ndarray, int]:
    """The limit of transfer iteration from the zero density, in closed form.

    Iterating the transfer operator from 0 is monotone decreasing (weights
    are nonpositive) and bounded below, but plain iteration can take
    arbitrarily long when some cycle mean is barely negative.  The limit
    itself has a path description: collapse the system to the edge graph
    source -> target with weight max over maps realizing that transition;
    every cycle mean is nonpositive and the per-point normalization forces
    a zero-mean cycle (all of whose edges are then exactly zero), so the
    limit at a point is the best total weight of a path from a zero-cycle
    node to it.  That is a max-plus matrix closure, computed here by
    Floyd-Warshall in O(points^3), then polished by a few transfer steps
    to settle float rounding (residual at 1e-15 scale, not 1e-7).
    """
    n = sys.n_points
    # edge[source, target] = best single-step weight
    edge = np.full((n, n), -np.inf)
    for m in range(sys.n_maps):
        np.maximum.at(edge, (np.arange(n), sys.maps[m]), sys.weights[m])

    # closure[i, j] = best nonempty-path weight i -> j
    closure = edge.copy()
    with np.errstate(invalid="ignore"):
        for k in range(n):
            via = closure[:, k][:, None] + closure[k, None, :]
            np.maximum(closure, np.where(np.isnan(via), -np.inf, via), out=closure)

    zero_cycle = np.diag(closure) >= -1e-300
    if not zero_cycle.any():
        raise RuntimeError("no zero-weight cycle; weights are not normalized")
    with np.errstate(invalid="ignore"):
        reach = closure[zero_cycle, :]  # paths from zero-cycle nodes
    lam = reach.max(axis=0)
    lam[zero_cycle] = np.maximum(lam[zero_cycle], 0.0)  # empty path

    for it in range(1, polish_iter + 1):
        nxt = mpifs_transfer(lam, sys)
        if np.array_equal(nxt, lam):
            return lam, it
        lam = nxt
    residual = _inf_aware_gap(mpifs_transfer(lam, sys), lam)
    if residual > 1e-14:
        raise RuntimeError(
            f"transfer iteration residual {residual!r} after polishing"
        )
    return lam, polish_iter


# ---------------------------------------------------------------------------
# The inverse problem: weights making a given density invariant
# ---------------------------------------------------------------------------


@dataclass
class InverseProblemSolution:
    weights: np.ndarray            # q[target, source] = h(target)
    eq_residual: float             # fixed-point equation residual
    normalization_residual: float  # max over points of |max over maps of q|
    system: MpIFSSystem


def inverse_problem_solve(h: np.ndarray) -> InverseProblemSolution:
    """Constant weights q[target, source] = h(target) for a normalized density.

    Requires h <= 0 with max h = 0.  The resulting constant-map system has
    h as an exact fixed density: max over sources of h(target) + h(source)
    equals h(target) because max h = 0.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 1 or h.size == 0:
        raise ValueError("density table must be a nonempty 1-D array")
    if not np.isfinite(h).all():
        raise ValueError("density table must be finite")
    if (h > NORMALIZATION_TOL).any():
        raise ValueError("density must be <= 0 everywhere")
    if abs(h.max()) > NORMALIZATION_TOL:
        raise ValueError(f"density must attain 0; max is {h.max()!r}")
    n = h.size
    q = np.repeat(h[:, None], n, axis=1)
    sys = MpIFSSystem.constant_maps(q)
    recovered = mpifs_transfer(h, sys)
    eq_residual = _inf_aware_gap(recovered, h)
    normalization_residual = float(np.abs(q.max(axis=0)).max())
    return InverseProblemSolution(q, eq_residual, normalization_residual, sys)
