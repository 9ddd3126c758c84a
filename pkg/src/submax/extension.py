"""Sparse fractional relaxation with subset-indexed coordinates.

A :class:`UnionDistribution` assigns an independent inclusion probability
to each of a small number of subset coordinates; the realized random set
is the union of the included subsets (plus a deterministic "sure" set that
folds every coordinate at probability one).  The relaxed objective is the
expected oracle value under this product distribution, and because only
``frac`` coordinates are strictly fractional it is computed *exactly* by
enumerating all ``2**frac`` inclusion patterns.  Restricted to singleton
coordinates this is the classical multilinear extension; subset
coordinates are what keep the enumeration small while a solver walks
towards an integral point.

Determinism contract: coordinates are stored sorted by ascending subset
bitmask; realization r includes coordinate j iff bit j of r is set;
per-realization weights multiply their factors in ascending coordinate
order; totals are reduced with a fixed-shape balanced pairwise tree.  Both
evaluation kernels implement this order exactly, so every number here is
reproducible bit for bit across kernels, runs, and thread counts.

Only one tolerance alters values anywhere in this module: coordinates
whose probability falls to 1e-15 or below are dropped as zero, preventing
``frac`` inflation from arithmetic dust.
"""

import numpy as np

from . import kernel
from .errors import BudgetError, UndefinedDerivative
from .ground import bit, iter_bits

DROP_EPS = 1e-15
DEFAULT_FRAC_CAP = 24


class UnionDistribution:
    """Immutable sparse vector of subset-coordinate inclusion probabilities."""

    __slots__ = ("coords", "sure", "cap", "_table")

    def __init__(self, coords, sure=0, cap=DEFAULT_FRAC_CAP):
        """``coords``: mapping or iterable of (subset mask, probability).

        Probabilities at most 1e-15 are dropped; probabilities equal to 1
        are folded into the sure set.  Anything else must lie strictly in
        (0, 1).  Coordinates whose subset is already covered by the sure
        set are pruned (they cannot change any realized union).
        """
        items = coords.items() if isinstance(coords, dict) else coords
        staged = {}
        sure_acc = int(sure)
        for mask, p in items:
            mask = int(mask)
            if mask == 0 or p <= DROP_EPS:
                continue
            if p == 1.0:
                sure_acc |= mask
                continue
            if not 0.0 < p < 1.0:
                raise ValueError(f"coordinate probability {p!r} outside [0, 1]")
            if mask in staged:
                raise ValueError(f"duplicate coordinate {mask:#x}")
            staged[mask] = float(p)
        kept = tuple(sorted((m, p) for m, p in staged.items()
                            if m & ~sure_acc))
        object.__setattr__(self, "coords", kept)
        object.__setattr__(self, "sure", sure_acc)
        object.__setattr__(self, "cap", cap)
        object.__setattr__(self, "_table", None)
        if len(kept) > cap:
            raise BudgetError(len(kept), cap)

    def __setattr__(self, name, value):
        raise AttributeError("UnionDistribution is immutable")

    def __copy__(self):
        return self

    def __deepcopy__(self, memo):
        return self

    def __reduce__(self):
        return (UnionDistribution, (self.coords, self.sure, self.cap))

    def __eq__(self, other):
        return (isinstance(other, UnionDistribution)
                and self.coords == other.coords and self.sure == other.sure)

    def __hash__(self):
        return hash((self.coords, self.sure))

    @classmethod
    def zero(cls, cap=DEFAULT_FRAC_CAP):
        return cls({}, 0, cap)

    @property
    def frac(self):
        return len(self.coords)

    @property
    def supp(self):
        return len(self.coords) + (1 if self.sure else 0)

    def coordinate(self, mask):
        mask = int(mask)
        for m, p in self.coords:
            if m == mask:
                return p
        return 0.0

    def covered_mask(self):
        m = self.sure
        for cm, _ in self.coords:
            m |= cm
        return m

    def dump(self):
        """Debug/report form: {"sure": [ids], "coords": [{"set": [...], "p": x}]}."""
        return {
            "sure": list(iter_bits(self.sure)),
            "coords": [{"set": list(iter_bits(m)), "p": p} for m, p in self.coords],
        }

    @classmethod
    def from_dump(cls, obj, cap=DEFAULT_FRAC_CAP):
        sure = 0
        for u in obj["sure"]:
            sure |= bit(u)
        coords = []
        for c in obj["coords"]:
            m = 0
            for u in c["set"]:
                m |= bit(u)
            coords.append((m, c["p"]))
        return cls(coords, sure, cap)

    def realization_table(self):
        """(masks, weights) over all 2**frac inclusion patterns.

        Realization r (ascending index) includes coordinate j iff bit j of
        r is set; its mask already contains the sure set.  Weight factors
        multiply in ascending coordinate order.
        """
        cached = self._table
        if cached is not None:
            return cached
        k = len(self.coords)
        if k > self.cap:
            raise BudgetError(k, self.cap)
        size = 1 << k
        masks = np.full(size, np.uint64(self.sure), dtype=np.uint64)
        weights = np.ones(size, dtype=np.float64)
        idx = np.arange(size, dtype=np.uint64)
        for j, (m, p) in enumerate(self.coords):
            sel = ((idx >> np.uint64(j)) & np.uint64(1)).astype(bool)
            masks[sel] |= np.uint64(m)
            weights[sel] *= p
            weights[~sel] *= 1.0 - p
        object.__setattr__(self, "_table", (masks, weights))
        return masks, weights

    def __repr__(self):
        sets = ", ".join(f"{m:#x}:{p:.4g}" for m, p in self.coords)
        return f"UnionDistribution(sure={self.sure:#x}, [{sets}])"


class UnionEvaluator:
    """Batch evaluator of F(e_A v y) over many join sets A for fixed y.

    Reuses one realization table for every query; this is the hot path of
    the greedy direction searches.  Counted queries: one per (realization,
    join set) pair, i.e. 2**frac per evaluated set.
    """

    def __init__(self, f, y, counted=True):
        self.f = f
        self.y = y
        self.counted = counted
        self.masks, self.weights = y.realization_table()
        self.plan = f.kernel_plan()

    def value_many(self, join_masks):
        unions = [int(m) | self.y.sure for m in join_masks]
        if self.counted:
            self.f.counter.add(len(self.masks) * len(unions),
                               evaluations=len(unions))
        if self.plan is not None:
            return kernel.weighted_join_sums(self.plan, self.masks,
                                             self.weights, unions)
        out = np.empty(len(unions), dtype=np.float64)
        for q, u in enumerate(unions):
            vals = np.array([self.f._value(int(m) | u) for m in self.masks])
            out[q] = _tree_sum_py(self.weights * vals)
        return out

    def value(self, join_mask):
        return float(self.value_many([join_mask])[0])


def _tree_sum_py(terms):
    buf = terms
    m = buf.shape[0]
    while m > 1:
        h = m // 2
        nxt = buf[0:2 * h:2] + buf[1:2 * h:2]
        if m & 1:
            nxt = np.concatenate([nxt, buf[m - 1:m]])
        buf = nxt
        m = buf.shape[0]
    return float(buf[0])


def expected_value(f, y, counted=True):
    """Exact expectation of the oracle under y; costs 2**frac queries."""
    return UnionEvaluator(f, y, counted=counted).value(0)


def union_evaluator(f, y, counted=True):
    return UnionEvaluator(f, y, counted=counted)


def marginal(y, u):
    """Inclusion probability of element u under y (exactly 1 on the sure set)."""
    if (y.sure >> u) & 1:
        return 1.0
    keep = 1.0
    for m, p in y.coords:
        if (m >> u) & 1:
            keep *= 1.0 - p
    return 1.0 - keep


def marginals(y, n):
    return np.array([marginal(y, u) for u in range(n)], dtype=np.float64)


def prob_sum(y1, y2):
    """Coordinate-wise probabilistic sum: 1 - (1-a)(1-b) per subset."""
    acc = dict(y1.coords)
    for m, p in y2.coords:
        q = acc.get(m, 0.0)
        acc[m] = 1.0 - (1.0 - p) * (1.0 - q)
    return UnionDistribution(acc, y1.sure | y2.sure, max(y1.cap, y2.cap))


def step_vector(parts, step, cap=DEFAULT_FRAC_CAP):
    """Distribution placing probability ``step`` on each nonempty part."""
    return UnionDistribution({int(m): step for m in parts if m}, 0, cap)


def join(y, a_mask):
    """Pin subset A at probability one (the sure set absorbs it)."""
    return UnionDistribution(y.coords, y.sure | int(a_mask), y.cap)


def relax(y, u):
    """Fold every coordinate through element u into the singleton {u}.

    The singleton receives the full marginal of u computed from the
    original vector; each other coordinate S+u merges into S by the
    probabilistic sum.  Preserves all marginals, never decreases the
    expected value, and grows frac by at most one.
    """
    ub = bit(u)
    if y.sure & ub:
        return y
    mar = marginal(y, u)
    base = {}
    merged = []
    for m, p in y.coords:
        if m & ub:
            rest = m & ~ub
            if rest:
                merged.append((rest, p))
        else:
            base[m] = p
    for rest, p in merged:
        q = base.get(rest, 0.0)
        base[rest] = 1.0 - (1.0 - p) * (1.0 - q)
    if mar > 0.0:
        base[ub] = mar
    return UnionDistribution(base, y.sure, y.cap)


def substitute(y, s_mask, p):
    """Return y with coordinate S forced to probability p (0 and 1 legal)."""
    s_mask = int(s_mask)
    coords = {m: q for m, q in y.coords if m != s_mask}
    if p:
        coords[s_mask] = p
    return UnionDistribution(coords, y.sure, y.cap)


def coordinate_derivative(f, y, s_mask):
    """Derivative of the expectation along coordinate S.

    Uses the multilinear identity: the slope equals
    (F(S pinned at one) - F(y)) / (1 - y_S).  Coordinates folded into the
    sure set are pinned at one and have no defined slope here.
    """
    s_mask = int(s_mask)
    if s_mask and (s_mask & ~y.sure) == 0:
        raise UndefinedDerivative(
            "coordinate lies inside the sure set (probability one)")
    p = y.coordinate(s_mask)
    hi = expected_value(f, join(y, s_mask))
    lo = expected_value(f, y)
    return (hi - lo) / (1.0 - p)
