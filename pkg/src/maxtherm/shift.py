"""Shift spaces on a finite alphabet: cylinder tables and transfer operators.

Sequences use symbols 1..d and 0-based positions, so two sequences
differing in their first symbol are at distance gamma^0 = 1 (the space has
diameter 1).  A depth-n table assigns one value per length-n word; words
are stored in base-d lexicographic order with the first symbol most
significant, which makes prepend/marginalize operations pure reshapes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

NORMALIZATION_TOL = 1e-12
LIPSCHITZ_SLACK = 1e-9  # absorbs rounding in the Lip <= 1 admissibility check


@dataclass(frozen=True)
class ShiftSpace:
    """Full shift on d symbols with the ultrametric gamma^(first difference).

    gamma must stay below 1/(d+1) so the dual-transfer contraction rate
    r = (d+1) gamma is strictly below 1.
    """

    d: int
    gamma: float

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("alphabet size d must be >= 2")
        if not (0.0 < self.gamma < 1.0 / (self.d + 1)):
            raise ValueError(
                f"gamma must lie in (0, 1/(d+1)) = (0, {1.0/(self.d+1)!r})"
            )

    @property
    def contraction_rate(self) -> float:
        return (self.d + 1) * self.gamma

    def n_words(self, depth: int) -> int:
        return self.d ** depth


def word_index(word: Sequence[int], d: int) -> int:
    """Base-d code of a word of symbols 1..d, first symbol most significant."""
    idx = 0
    for s in word:
        if not 1 <= s <= d:
            raise ValueError(f"symbol {s} outside alphabet 1..{d}")
        idx = idx * d + (s - 1)
    return idx


def index_word(idx: int, depth: int, d: int) -> Tuple[int, ...]:
    out = []
    for _ in range(depth):
        out.append(idx % d + 1)
        idx //= d
    return tuple(reversed(out))


def symbol_table(depth: int, d: int) -> np.ndarray:
    """(d^depth, depth) array listing every word in lexicographic order."""
    n = d ** depth
    out = np.empty((n, depth), dtype=np.int64)
    codes = np.arange(n)
    for j in range(depth - 1, -1, -1):
        out[:, j] = codes % d + 1
        codes //= d
    return out


def word_metric(u: Sequence[int], v: Sequence[int], space: ShiftSpace) -> float:
    """gamma^(first differing 0-based position); 0 if the words are equal."""
    if len(u) != len(v):
        raise ValueError("words must have equal length")
    for i, (a, b) in enumerate(zip(u, v)):
        if a != b:
            return space.gamma ** i
    return 0.0


class DepthKFunction:
    """A function on the shift space depending on its first ``depth`` symbols."""

    def __init__(self, space: ShiftSpace, depth: int, values):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        vals = np.asarray(values, dtype=float).reshape(-1)
        if vals.size != space.n_words(depth):
            raise ValueError(
                f"depth-{depth} table needs {space.n_words(depth)} values, "
                f"got {vals.size}"
            )
        if not np.isfinite(vals).all():
            raise ValueError("table values must be finite")
        self.space = space
        self.depth = depth
        self.values = vals

    def at_depth(self, depth: int) -> np.ndarray:
        """Table of this function viewed at a deeper resolution."""
        if depth < self.depth:
            raise ValueError("cannot view a table at a shallower depth")
        return np.repeat(self.values, self.space.d ** (depth - self.depth))

    def value_at(self, word: Sequence[int]) -> float:
        if len(word) < self.depth:
            raise ValueError("word shorter than the table depth")
        return float(self.values[word_index(word[: self.depth], self.space.d)])

    def __sub__(self, other: "DepthKFunction") -> "DepthKFunction":
        k = max(self.depth, other.depth)
        return DepthKFunction(self.space, k, self.at_depth(k) - other.at_depth(k))

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())


def lipschitz_constant(f: DepthKFunction) -> float:
    """sup over word pairs of |f(u) - f(v)| / gamma^(first difference).

    Grouped by the position of the first difference: words sharing a
    length-L prefix and differing at position L contribute
    (max - min over different-symbol values) / gamma^L.
    """
    d, g = f.space.d, f.space.gamma
    k = f.depth
    if k == 0:
        return 0.0
    best = 0.0
    for level in range(k):
        blocks = f.values.reshape(d ** level, d, d ** (k - level - 1))
        hi = blocks.max(axis=2)   # per (prefix, symbol)
        lo = blocks.min(axis=2)
        for s in range(d):
            for t in range(d):
                if s == t:
                    continue
                gap = float((hi[:, s] - lo[:, t]).max())
                best = max(best, gap / g ** level)
    return best


class Jacobian:
    """A normalized Lipschitz transfer kernel given as a finite-depth table.

    Requirements: values in [0, 1], sum over the first symbol equal to 1
    for every continuation word, and Lipschitz constant at most 1.
    """

    def __init__(self, space: ShiftSpace, depth: int, values):
        if depth < 1:
            raise ValueError("a transfer kernel must read at least one symbol")
        fn = DepthKFunction(space, depth, values)
        vals = fn.values
        if (vals < -NORMALIZATION_TOL).any() or (vals > 1 + NORMALIZATION_TOL).any():
            raise ValueError("kernel values must lie in [0, 1]")
        sums = vals.reshape(space.d, -1).sum(axis=0)
        if np.abs(sums - 1.0).max() > NORMALIZATION_TOL:
            raise ValueError(
                f"kernel is not normalized: max |sum - 1| = "
                f"{np.abs(sums - 1.0).max():.3e}"
            )
        lip = lipschitz_constant(fn)
        if lip > 1.0 + LIPSCHITZ_SLACK:
            raise ValueError(f"kernel Lipschitz constant {lip!r} exceeds 1")
        self.space = space
        self.depth = depth
        self.values = vals
        self.fn = fn

    def lipschitz(self) -> float:
        return lipschitz_constant(self.fn)


def make_bernoulli_jacobian(p: float, space: ShiftSpace) -> Jacobian:
    """Depth-1 kernel giving weight p to symbol 1 and 1-p to symbol 2."""
    if space.d != 2:
        raise ValueError("Bernoulli kernels are defined for d = 2")
    if not (0.0 <= p <= 1.0):
        raise ValueError("p must lie in [0, 1]")
    return Jacobian(space, 1, [p, 1.0 - p])


class CylinderMeasure:
    """A probability specified on all words of a fixed depth."""

    def __init__(self, space: ShiftSpace, depth: int, masses):
        if depth < 0:
            raise ValueError("depth must be >= 0")
        m = np.asarray(masses, dtype=float).reshape(-1)
        if m.size != space.n_words(depth):
            raise ValueError(
                f"depth-{depth} measure needs {space.n_words(depth)} masses, "
                f"got {m.size}"
            )
        if (m < -NORMALIZATION_TOL).any():
            raise ValueError("masses must be nonnegative")
        if abs(m.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"masses sum to {m.sum()!r}, not 1")
        self.space = space
        self.depth = depth
        self.masses = np.clip(m, 0.0, None)

    @classmethod
    def trivial(cls, space: ShiftSpace) -> "CylinderMeasure":
        return cls(space, 0, [1.0])

    @classmethod
    def uniform(cls, space: ShiftSpace, depth: int) -> "CylinderMeasure":
        n = space.n_words(depth)
        return cls(space, depth, np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, space: ShiftSpace, word: Sequence[int]) -> "CylinderMeasure":
        m = np.zeros(space.n_words(len(word)))
        m[word_index(word, space.d)] = 1.0
        return cls(space, len(word), m)

    @classmethod
    def bernoulli(cls, space: ShiftSpace, probs, depth: int) -> "CylinderMeasure":
        """Product measure with the same symbol distribution per coordinate."""
        p = np.asarray(probs, dtype=float)
        if p.size != space.d or abs(p.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("symbol probabilities must sum to 1")
        m = np.array([1.0])
        for _ in range(depth):
            m = np.kron(m, p)
        return cls(space, depth, m)

    def mass_of(self, word: Sequence[int]) -> float:
        """Mass of the cylinder with the given prefix (any length <= depth)."""
        k = len(word)
        if k > self.depth:
            raise ValueError("prefix longer than the table depth")
        block = self.masses.reshape(self.space.n_words(k), -1)
        return float(block[word_index(word, self.space.d)].sum())

    def refine(self) -> "CylinderMeasure":
        """Split every cylinder uniformly over its d children."""
        return CylinderMeasure(
            self.space, self.depth + 1, np.repeat(self.masses, self.space.d) / self.space.d
        )

    def coarsen(self) -> "CylinderMeasure":
        """Marginalize out the last coordinate."""
        if self.depth == 0:
            raise ValueError("cannot coarsen a depth-0 measure")
        return CylinderMeasure(
            self.space, self.depth - 1, self.masses.reshape(-1, self.space.d).sum(axis=1)
        )

    def at_depth(self, depth: int) -> "CylinderMeasure":
        out = self
        while out.depth < depth:
            out = out.refine()
        while out.depth > depth:
            out = out.coarsen()
        return out

    def integrate(self, f: DepthKFunction) -> float:
        if f.depth > self.depth:
            raise ValueError("observable deeper than the measure table")
        return float(self.masses @ f.at_depth(self.depth))

    def to_json(self) -> str:
        return json.dumps(
            {
                "d": self.space.d,
                "gamma": self.space.gamma,
                "depth": self.depth,
                "masses": [float(x) for x in self.masses],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "CylinderMeasure":
        obj = json.loads(text)
        space = ShiftSpace(int(obj["d"]), float(obj["gamma"]))
        return cls(space, int(obj["depth"]), np.asarray(obj["masses"], dtype=float))


def transfer_apply(J: Jacobian, f: DepthKFunction) -> DepthKFunction:
    """Transfer image x -> sum over symbols a of J(a.x) f(a.x).

    The output reads one symbol fewer than the deeper of the two inputs
    (never fewer than zero symbols).
    """
    if f.space != J.space:
        raise ValueError("kernel and observable live on different spaces")
    k = max(f.depth, J.depth)
    prod = J.fn.at_depth(k) * f.at_depth(k)
    out = prod.reshape(J.space.d, -1).sum(axis=0)
    return DepthKFunction(J.space, k - 1, out)


def dual_apply(J: Jacobian, mu: CylinderMeasure) -> CylinderMeasure:
    """Dual transfer image: nu[a.w] = J(a.w) mu[w], one level deeper.

    Requires the kernel depth to be at most depth(mu) + 1; refine mu first
    when it is not, so the cost of deeper tables stays visible at the call
    site.
    """
    if mu.space != J.space:
        raise ValueError("kernel and measure live on different spaces")
    if J.depth > mu.depth + 1:
        raise ValueError(
            f"kernel depth {J.depth} exceeds measure depth {mu.depth} + 1; "
            "refine the measure first"
        )
    d = J.space.d
    lifted = J.fn.at_depth(mu.depth + 1)
    out = lifted * np.tile(mu.masses, d)
    return CylinderMeasure(J.space, mu.depth + 1, out)


def pushforward_apply(mu: CylinderMeasure) -> CylinderMeasure:
    """Image under the shift: nu[w] = sum over symbols a of mu[a.w]."""
    if mu.depth < 1:
        raise ValueError("cannot push forward a depth-0 measure")
    d = mu.space.d
    out = mu.masses.reshape(d, -1).sum(axis=0)
    return CylinderMeasure(mu.space, mu.depth - 1, out)


@dataclass
class ComposeResult:
    measure: CylinderMeasure
    w1_trace: List[float]  # distance between successive composition prefixes


def compose_duals(
    js: Sequence[Jacobian], nu0: CylinderMeasure, track_trace: bool = True
) -> ComposeResult:
    """Apply the dual-transfer composition of a kernel sequence to nu0.

    js[-1] acts first and js[0] last, matching the convention that the
    leftmost kernel is outermost.  The trace holds the distance between
    consecutive prefix compositions (the deeper one marginalized down to
    the shallower depth, which is its exact marginal table).
    """
    if not js:
        raise ValueError("kernel sequence must be nonempty")
    from .transport import w1_tree  # local import to avoid a cycle

    def prefix_result(k: int) -> CylinderMeasure:
        out = nu0
        for J in reversed(js[:k]):
            out = dual_apply(J, out)
        return out

    full = prefix_result(len(js))
    trace: List[float] = []
    if track_trace:
        prev = prefix_result(1)
        for k in range(2, len(js) + 1):
            cur = prefix_result(k)
            trace.append(w1_tree(cur.at_depth(prev.depth), prev))
            prev = cur
    return ComposeResult(measure=full, w1_trace=trace)
