"""Running-max Birkhoff dynamics and the max-plus partition function.

The running max of an observable along shift orbits converges almost
surely to its sup when the sampling measure charges every cylinder.  The
partition function c_n(t) = (1/n) log E[exp(n t max-sum)] feeds a
Chebyshev-type upper large-deviation bound inf over t >= 0 of
t b + c(-t).  The two-symbol worked example has everything in closed
form: with f the indicator of first symbol 1 and symbol 2 carrying mass
p, the partition integral is exp(-n t)(1 - p^n) + p^n, the limit of
c_n(-t) is max(-t, log p), the bound is (1 - b) log p at t = -log p, and
the true decay rate is log p, strictly below the bound.

Symbol convention: the classical two-letter presentation of this example
uses alphabet {0, 1} with mass p on 0 and f = indicator of 1.  Here 0
becomes symbol 2 and 1 becomes symbol 1, so f(1) = 1, f(2) = 0 and
symbol 2 carries mass p.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .shift import DepthKFunction, ShiftSpace, symbol_table


# ---------------------------------------------------------------------------
# Orbit sampling
# ---------------------------------------------------------------------------


class OrbitSampler:
    """Seeded sampler of i.i.d. or one-step Markov symbol streams.

    Each orbit is a fresh stream (no window reuse along a single long
    orbit), so Birkhoff windows across orbits are independent.
    """

    def __init__(
        self,
        d: int,
        n_orbits: int,
        seed: int,
        probs: Optional[np.ndarray] = None,
        transition: Optional[np.ndarray] = None,
    ):
        if (probs is None) == (transition is None):
            raise ValueError("specify exactly one of probs / transition")
        self.d = d
        self.n_orbits = int(n_orbits)
        self.seed = int(seed)
        if probs is not None:
            p = np.asarray(probs, dtype=float)
            if p.size != d or abs(p.sum() - 1.0) > 1e-12 or (p < 0).any():
                raise ValueError("invalid symbol distribution")
            self.kind = "bernoulli"
            self.probs = p
            self.transition = None
        else:
            P = np.asarray(transition, dtype=float)
            if P.shape != (d, d) or (np.abs(P.sum(axis=1) - 1.0) > 1e-12).any():
                raise ValueError("transition matrix rows must sum to 1")
            if (P < 0).any():
                raise ValueError("transition probabilities must be nonnegative")
            self.kind = "markov"
            self.transition = P
            # stationary row vector of P
            vals, vecs = np.linalg.eig(P.T)
            j = int(np.argmin(np.abs(vals - 1.0)))
            pi = np.real(vecs[:, j])
            self.probs = pi / pi.sum()

    @classmethod
    def bernoulli(cls, probs, n_orbits: int, seed: int) -> "OrbitSampler":
        p = np.asarray(probs, dtype=float)
        return cls(d=p.size, n_orbits=n_orbits, seed=seed, probs=p)

    @classmethod
    def markov(cls, transition, n_orbits: int, seed: int) -> "OrbitSampler":
        P = np.asarray(transition, dtype=float)
        return cls(d=P.shape[0], n_orbits=n_orbits, seed=seed, transition=P)

    @property
    def positive_on_cylinders(self) -> bool:
        if self.kind == "bernoulli":
            return bool((self.probs > 0).all())
        return bool((self.transition > 0).all())

    def sample(self, length: int) -> np.ndarray:
        """(n_orbits, length) array of symbols 1..d."""
        rng = np.random.default_rng(self.seed)
        if self.kind == "bernoulli":
            return (
                rng.choice(self.d, size=(self.n_orbits, length), p=self.probs) + 1
            )
        orbits = np.empty((self.n_orbits, length), dtype=np.int64)
        cum0 = np.cumsum(self.probs)
        orbits[:, 0] = np.searchsorted(cum0, rng.random(self.n_orbits)) + 1
        cum = np.cumsum(self.transition, axis=1)
        for t in range(1, length):
            u = rng.random(self.n_orbits)
            rows = cum[orbits[:, t - 1] - 1]
            orbits[:, t] = (rows < u[:, None]).sum(axis=1) + 1
        return orbits


def maxplus_birkhoff(f: DepthKFunction, orbit: Sequence[int], n: int) -> float:
    """Running max of f over the first n shift iterates of one orbit."""
    k = max(f.depth, 1)
    orbit = np.asarray(orbit, dtype=np.int64)
    if orbit.size < n + k - 1:
        raise ValueError(
            f"orbit of length {orbit.size} too short for {n} windows of "
            f"depth {k}"
        )
    return float(birkhoff_max_table(f, orbit[None, :], n)[0])


def birkhoff_max_table(f: DepthKFunction, orbits: np.ndarray, n: int) -> np.ndarray:
    """Vector of running maxes over the first n windows of each orbit row."""
    k = max(f.depth, 1)
    d = f.space.d
    if orbits.shape[1] < n + k - 1:
        raise ValueError("orbits too short for the requested window count")
    codes = np.zeros((orbits.shape[0], n), dtype=np.int64)
    for j in range(k):
        codes = codes * d + (orbits[:, j : j + n] - 1)
    table = f.values if f.depth > 0 else np.repeat(f.values, d)
    return table[codes].max(axis=1)


@dataclass
class BirkhoffReport:
    sup_value: float
    attained_fraction: float
    first_hit_mean: float
    miss_probability_estimate: float  # for depth-1 observables with unique top


def birkhoff_limit_test(
    sampler: OrbitSampler,
    f: DepthKFunction,
    length: int,
    tol: float = 1e-9,
) -> BirkhoffReport:
    """Fraction of orbits whose running max reaches sup f within tol.

    Requires the sampling measure to charge every cylinder (otherwise the
    sup over the whole space need not be seen along orbits).
    """
    if not sampler.positive_on_cylinders:
        raise ValueError("sampling measure must be positive on all cylinders")
    k = max(f.depth, 1)
    orbits = sampler.sample(length + k - 1)
    sup_f = float(f.values.max())

    codes = np.zeros((orbits.shape[0], length), dtype=np.int64)
    for j in range(k):
        codes = codes * sampler.d + (orbits[:, j : j + length] - 1)
    table = f.values if f.depth > 0 else np.repeat(f.values, sampler.d)
    vals = table[codes]
    hit = vals >= sup_f - tol
    attained = hit.any(axis=1)
    first = np.where(attained, hit.argmax(axis=1) + 1, length + 1)

    # exact per-window miss probability for depth-1 observables
    if f.depth <= 1 and sampler.kind == "bernoulli":
        top_mass = float(sampler.probs[table >= sup_f - tol].sum())
        miss = (1.0 - top_mass) ** length
    else:
        miss = float(1.0 - attained.mean())
    return BirkhoffReport(
        sup_value=sup_f,
        attained_fraction=float(attained.mean()),
        first_hit_mean=float(first[attained].mean()) if attained.any() else np.inf,
        miss_probability_estimate=miss,
    )


# ---------------------------------------------------------------------------
# Partition function: closed form and Monte Carlo
# ---------------------------------------------------------------------------


def partition_integral_exact(p: float, t: float, n: int) -> float:
    """Closed form of the partition integral in the two-symbol example.

    Equals exp(-n t) (1 - p^n) + p^n, where p is the mass of the symbol
    on which f vanishes.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie in (0, 1)")
    return float(np.exp(-n * t) * (1.0 - p ** n) + p ** n)


def c_n_exact(p: float, t: float, n: int) -> float:
    """(1/n) log of the partition integral at argument -t, in log space.

    Stable for large n where exp(-n t) and p^n underflow.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie in (0, 1)")
    log_pn = n * np.log(p)
    # log(exp(-n t)(1 - p^n) + p^n)
    first = -n * t + np.log1p(-np.exp(log_pn)) if log_pn < -1e-17 else -n * t
    return float(np.logaddexp(first, log_pn) / n)


def c_limit_exact(p: float, t: float) -> float:
    """Limit of c_n(-t): max(-t, log p)."""
    return max(-t, float(np.log(p)))


@dataclass
class McEstimate:
    value: float
    ci_low: float
    ci_high: float
    n_samples: int
    seed: int

    def contains(self, x: float) -> bool:
        return self.ci_low <= x <= self.ci_high


def _log_mean_exp(x: np.ndarray) -> float:
    m = x.max()
    return float(m + np.log(np.mean(np.exp(x - m))))


def partition_function_mc(
    sampler: OrbitSampler,
    f: DepthKFunction,
    t: float,
    n: int,
    n_boot: int = 200,
    ci: float = 0.95,
) -> McEstimate:
    """Monte Carlo estimate of c_n(t) with a bootstrap confidence interval."""
    k = max(f.depth, 1)
    orbits = sampler.sample(n + k - 1)
    maxes = birkhoff_max_table(f, orbits, n)
    expo = n * t * maxes
    value = _log_mean_exp(expo) / n

    rng = np.random.default_rng(sampler.seed + 0x9E3779B9)
    m = maxes.size
    boots = np.empty(n_boot)
    for b in range(n_boot):
        idx = rng.integers(0, m, m)
        boots[b] = _log_mean_exp(expo[idx]) / n
    alpha = (1.0 - ci) / 2.0
    lo, hi = np.quantile(boots, [alpha, 1.0 - alpha])
    return McEstimate(value, float(lo), float(hi), m, sampler.seed)


# ---------------------------------------------------------------------------
# Upper large-deviation bound and the exact rate of the worked example
# ---------------------------------------------------------------------------


def ldp_upper_bound(
    c_neg: Callable[[float], float],
    b: float,
    sup_f: float,
    t_max: Optional[float] = None,
    tol: float = 1e-10,
) -> Tuple[float, float]:
    """Minimize t b + c(-t) over t >= 0; returns (minimizer, bound).

    The objective is convex in t (log-moment functions are convex), and
    typically has kinks, so the search is golden-section, which needs no
    smoothness.
    """
    if b >= sup_f:
        raise ValueError("threshold must lie strictly below sup f")
    if t_max is None:
        t_max = 50.0

    def obj(t: float) -> float:
        return t * b + c_neg(t)

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, d = 0.0, float(t_max)
    c1 = d - invphi * (d - a)
    c2 = a + invphi * (d - a)
    f1, f2 = obj(c1), obj(c2)
    while d - a > tol:
        if f1 <= f2:
            d, c2, f2 = c2, c1, f1
            c1 = d - invphi * (d - a)
            f1 = obj(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + invphi * (d - a)
            f2 = obj(c2)
    t_star = (a + d) / 2.0
    return t_star, obj(t_star)


def bernoulli_ldp_bound(p: float, b: float) -> Tuple[float, float]:
    """Bound for the worked example via its closed-form c: uses the
    bracket [0, 10 |log p|]."""
    if not (0.0 < b < 1.0):
        raise ValueError("threshold must lie in (0, 1) for this example")
    t_star, bound = ldp_upper_bound(
        lambda t: c_limit_exact(p, t), b, sup_f=1.0,
        t_max=10.0 * abs(np.log(p)),
    )
    return t_star, bound


@dataclass
class RateEstimate:
    b: float
    n_values: List[int]
    rates: List[float]        # (1/n) log of the event probability
    limit_rate: float
    ldp_bound: float
    bound_minimizer: float


def empirical_rate(p: float, b: float, n_values: Sequence[int]) -> RateEstimate:
    """Exact decay rate of the event {max-sum <= b} in the worked example.

    For 0 < b < 1 the event is exactly the all-symbol-2 cylinder, with
    probability p^n, so the rate is log p at every n.  For b >= 1 the
    event has probability 1 and the rate is 0.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie in (0, 1)")
    rates = []
    for n in n_values:
        if b >= 1.0:
            rates.append(0.0)
        elif b < 0.0:
            rates.append(-np.inf)
        elif p ** n > 0.0:
            rates.append(float(np.log(p ** n)) / n)
        else:
            # p^n underflows; (1/n) log p^n is log p identically
            rates.append(float(np.log(p)))
    if 0.0 < b < 1.0:
        t_star, bound = bernoulli_ldp_bound(p, b)
    else:
        t_star, bound = 0.0, 0.0
    return RateEstimate(
        b=b,
        n_values=list(n_values),
        rates=rates,
        limit_rate=rates[-1] if rates else float(np.log(p)),
        ldp_bound=bound,
        bound_minimizer=t_star,
    )


# ---------------------------------------------------------------------------
# Max-plus convexity of the partition function
# ---------------------------------------------------------------------------


@dataclass
class ConvexityReport:
    equality_residual: float   # c(max(s,t)) vs max(c(s), c(t)), f >= 0
    convexity_slack: float     # max(a+c(t), b+c(s)) - c(max(a+t, b+s)), f >= 1

    @property
    def holds(self) -> bool:
        return self.equality_residual <= 1e-12 and self.convexity_slack >= -1e-12


def c_maxplus_convexity_check(
    f: DepthKFunction,
    sampler: OrbitSampler,
    s: float,
    t: float,
    alpha: float,
    beta: float,
    n: int = 50,
    c_exact: Optional[Callable[[float], float]] = None,
) -> ConvexityReport:
    """Check monotone-equality and max-plus convexity of c_n at finite n.

    Requires f >= 1 and max(alpha, beta) = 0 (beta = -inf degenerates the
    inequality to c(t) <= c(t)).  All evaluations reuse one orbit sample,
    under which both relations hold pathwise, so residuals are at float
    precision rather than Monte Carlo scale.  Passing ``c_exact`` checks
    the closed form instead of sampling.
    """
    if float(f.values.min()) < 1.0:
        raise ValueError("the convexity check needs f >= 1")
    if max(alpha, beta) != 0.0:
        raise ValueError("weights must satisfy max(alpha, beta) = 0")

    if c_exact is not None:
        c = c_exact
    else:
        k = max(f.depth, 1)
        orbits = sampler.sample(n + k - 1)
        maxes = birkhoff_max_table(f, orbits, n)

        def c(u: float) -> float:
            return _log_mean_exp(n * u * maxes) / n

    equality_residual = abs(c(max(s, t)) - max(c(s), c(t)))
    lhs_args = []
    if alpha != -np.inf:
        lhs_args.append(alpha + t)
    if beta != -np.inf:
        lhs_args.append(beta + s)
    lhs = c(max(lhs_args))
    rhs_terms = []
    if alpha != -np.inf:
        rhs_terms.append(alpha + c(t))
    if beta != -np.inf:
        rhs_terms.append(beta + c(s))
    slack = max(rhs_terms) - lhs
    return ConvexityReport(equality_residual=equality_residual, convexity_slack=slack)


def chebyshev_step_exact(p: float, t: float, b: float, n: int) -> Tuple[float, float]:
    """Both sides of the Chebyshev step in the worked example, exactly.

    Returns (event probability, exp(n t b) * partition integral at -t);
    the first never exceeds the second for t >= 0.
    """
    if t < 0:
        raise ValueError("the Chebyshev step needs t >= 0")
    prob = p ** n if 0.0 < b < 1.0 else (1.0 if b >= 1.0 else 0.0)
    rhs = float(np.exp(n * t * b) * partition_integral_exact(p, t, n))
    return prob, rhs
