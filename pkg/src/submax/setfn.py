"""Set-function value oracles over bitmask subsets, with query accounting.

Three concrete families (explicit table, weighted coverage, weighted graph
cut) plus three wrappers the solvers need:

* dummy augmentation - appends zero-marginal tail elements and strips them
  before evaluating, so any independent set can be completed to a basis
  without changing its value;
* penalty shift - subtracts, for each element of a fixed set Z present in
  the argument, its singleton marginal plus one, making every element of Z
  strictly harmful while leaving all other marginals untouched;
* translation - evaluates relative to a fixed base set E, i.e.
  g(S) = f(S | E).

Every oracle is immutable after construction.  ``value`` bumps the shared
query counter by exactly one per evaluated subset; bulk entry points bump
it by the number of subsets evaluated.  ``peek``/``peek_many`` are the
uncounted twins reserved for verification code, never used by solvers.

Accumulation order inside a single evaluation is fixed (ascending universe
item, ascending edge index, ascending penalized element) and matches the
evaluation kernels bit for bit, so the pure and planned paths agree
exactly.
"""

import threading

import numpy as np

from .errors import InstanceError
from .ground import GroundSet, bit, iter_bits, popcount
from .kernel import (FAMILY_COVERAGE, FAMILY_CUT, FAMILY_TABLE, KernelPlan,
                     eval_masks)

TABLE_CAP = 20


class QueryCounter:
    """Atomic monotone counters, safe under concurrent evaluation.

    ``count`` is raw oracle queries (one per evaluated subset, so one exact
    expectation at fractional support k costs 2**k).  ``evaluations`` is
    the number of set-value requests made by the algorithms, i.e. raw
    queries without the 2**frac enumeration factor.  Bumps happen once per
    call or batch, so the lock is off the hot path.
    """

    __slots__ = ("count", "evaluations", "_lock")

    def __init__(self):
        self.count = 0
        self.evaluations = 0
        self._lock = threading.Lock()

    def add(self, k=1, evaluations=None):
        with self._lock:
            self.count += k
            self.evaluations += k if evaluations is None else evaluations


class SetFunction:
    """Value-oracle base: subclasses implement ``_value`` over bitmasks."""

    def __init__(self, ground, counter=None):
        self.ground = ground
        self.counter = counter if counter is not None else QueryCounter()
        self._plan = None

    def value(self, mask):
        self.counter.add(1)
        return self._value(mask)

    def value_many(self, masks):
        """Counted bulk evaluation; one query per mask."""
        masks = np.asarray(masks, dtype=np.uint64)
        self.counter.add(int(masks.shape[0]))
        plan = self.kernel_plan()
        if plan is not None:
            return eval_masks(plan, masks)
        return np.array([self._value(int(m)) for m in masks], dtype=np.float64)

    def peek(self, mask):
        """Uncounted evaluation, for verification oracles only."""
        return self._value(mask)

    def peek_many(self, masks):
        masks = np.asarray(masks, dtype=np.uint64)
        plan = self.kernel_plan()
        if plan is not None:
            return eval_masks(plan, masks)
        return np.array([self._value(int(m)) for m in masks], dtype=np.float64)

    def marginal(self, u, mask):
        """f(mask + u) - f(mask), two counted queries."""
        return self.value(mask | bit(u)) - self.value(mask)

    def kernel_plan(self):
        return self._plan

    def _value(self, mask):
        raise NotImplementedError


class TableFunction(SetFunction):
    def __init__(self, values, nonneg=True, counter=None):
        values = np.asarray(values, dtype=np.float64)
        n = (values.shape[0] - 1).bit_length() if values.shape[0] else 0
        if values.shape[0] != (1 << n) or values.shape[0] == 0:
            raise InstanceError(f"table length {values.shape[0]} is not a power of two")
        if n > TABLE_CAP:
            raise InstanceError(f"table over {n} elements exceeds cap {TABLE_CAP}")
        if nonneg and np.any(values < 0):
            raise InstanceError("table declared non-negative but has negative entries")
        super().__init__(GroundSet(n), counter)
        self.values = values
        self._plan = KernelPlan(
            kind=FAMILY_TABLE, n_base=n, and_mask=(1 << n) - 1, table=values)

    def _value(self, mask):
        return float(self.values[mask & self.ground.real_mask])


class CoverageFunction(SetFunction):
    """f(S) = total weight of universe items covered by the members of S."""

    def __init__(self, universe_weights, covers, counter=None):
        weights = np.asarray(universe_weights, dtype=np.float64)
        if np.any(weights < 0):
            raise InstanceError("coverage weights must be non-negative")
        n_universe = weights.shape[0]
        if n_universe > 63:
            raise InstanceError("coverage universe larger than 63 items")
        n = len(covers)
        masks = np.zeros(n, dtype=np.uint64)
        for e, items in enumerate(covers):
            m = 0
            for item in items:
                if not 0 <= item < n_universe:
                    raise InstanceError(f"cover item {item} outside universe")
                m |= 1 << item
            masks[e] = m
        super().__init__(GroundSet(n), counter)
        self.universe_weights = weights
        self.cover_masks = masks
        self._plan = KernelPlan(
            kind=FAMILY_COVERAGE, n_base=n, and_mask=(1 << n) - 1,
            cover_masks=masks, cover_weights=weights, n_universe=n_universe)

    def _value(self, mask):
        covered = 0
        for e in iter_bits(mask & self.ground.real_mask):
            covered |= int(self.cover_masks[e])
        acc = 0.0
        for b in range(self.universe_weights.shape[0]):
            acc = acc + self.universe_weights[b] * ((covered >> b) & 1)
        return float(acc)


class CutFunction(SetFunction):
    """f(S) = total weight of edges crossing (S, complement); non-monotone."""

    def __init__(self, n, edges, counter=None):
        a = np.empty(len(edges), dtype=np.int64)
        b = np.empty(len(edges), dtype=np.int64)
        w = np.empty(len(edges), dtype=np.float64)
        for i, (ea, eb, ew) in enumerate(edges):
            if ea == eb:
                raise InstanceError(f"self-loop on vertex {ea}")
            if not (0 <= ea < n and 0 <= eb < n):
                raise InstanceError(f"edge ({ea},{eb}) outside vertex range")
            if ew < 0:
                raise InstanceError("cut weights must be non-negative")
            a[i], b[i], w[i] = ea, eb, float(ew)
        super().__init__(GroundSet(n), counter)
        self.edges_a, self.edges_b, self.edge_weights = a, b, w
        self._plan = KernelPlan(
            kind=FAMILY_CUT, n_base=n, and_mask=(1 << n) - 1,
            edges_a=a, edges_b=b, edge_weights=w)

    def _value(self, mask):
        mask &= self.ground.real_mask
        acc = 0.0
        for i in range(self.edges_a.shape[0]):
            xa = (mask >> int(self.edges_a[i])) & 1
            xb = (mask >> int(self.edges_b[i])) & 1
            acc = acc + self.edge_weights[i] * float(xa ^ xb)
        return float(acc)


class DummyAugmented(SetFunction):
    """Ignores the dummy tail: value(S) = base(S intersect real elements)."""

    def __init__(self, base, count):
        if count < 0:
            raise InstanceError("dummy count must be non-negative")
        if isinstance(base, DummyAugmented):
            base = base.base
        if base.ground.n_dummy:
            raise InstanceError("base oracle already has dummy elements")
        super().__init__(GroundSet(base.ground.n_total, count), base.counter)
        self.base = base
        inner = base.kernel_plan()
        if inner is not None and inner.or_mask == 0:
            self._plan = inner  # masking with and_mask already strips the tail

    def _value(self, mask):
        return self.base._value(mask & self.ground.real_mask)


class ShiftedFunction(SetFunction):
    """Subtracts (f({u}) - f(empty) + 1) for every present u of a fixed set.

    Elements outside the set keep their base marginals exactly; elements
    inside lose at least 1 whenever added, so a greedy step never picks
    them while a zero-marginal alternative exists.  May take negative
    values even when the base does not.
    """

    def __init__(self, base, avoid_mask):
        if avoid_mask & ~base.ground.full_mask:
            raise InstanceError("shifted set must lie inside the ground set")
        super().__init__(base.ground, base.counter)
        self.base = base
        self.avoid_mask = avoid_mask
        f_empty = base.peek(0)
        pen = np.zeros(64, dtype=np.float64)
        n_pen = popcount(avoid_mask)
        # one-time construction cost: |Z| singleton queries plus the empty set
        base.counter.add(n_pen + 1 if n_pen else 0)
        for u in iter_bits(avoid_mask):
            pen[u] = base.peek(bit(u)) - f_empty + 1.0
        self.penalties = pen
        inner = base.kernel_plan()
        if inner is not None and inner.or_mask == 0:
            self._plan = KernelPlan(
                kind=inner.kind, n_base=inner.n_base, or_mask=0,
                and_mask=inner.and_mask, pen_mask=inner.pen_mask | avoid_mask,
                pen=inner.pen + pen, addend=inner.addend, table=inner.table,
                cover_masks=inner.cover_masks, cover_weights=inner.cover_weights,
                n_universe=inner.n_universe, edges_a=inner.edges_a,
                edges_b=inner.edges_b, edge_weights=inner.edge_weights)

    def _value(self, mask):
        v = self.base._value(mask)
        for u in iter_bits(mask & self.avoid_mask):
            v = v - self.penalties[u]
        return float(v)


class TranslatedFunction(SetFunction):
    """g(S) = base(S | E); used with S restricted to elements outside E."""

    def __init__(self, base, base_mask):
        if base_mask & ~base.ground.real_mask:
            raise InstanceError("translation set must contain real elements only")
        super().__init__(base.ground, base.counter)
        self.base = base
        self.base_mask = base_mask
        inner = base.kernel_plan()
        if inner is not None:
            self._plan = KernelPlan(
                kind=inner.kind, n_base=inner.n_base,
                or_mask=inner.or_mask | base_mask, and_mask=inner.and_mask,
                pen_mask=inner.pen_mask, pen=inner.pen, addend=inner.addend,
                table=inner.table, cover_masks=inner.cover_masks,
                cover_weights=inner.cover_weights, n_universe=inner.n_universe,
                edges_a=inner.edges_a, edges_b=inner.edges_b,
                edge_weights=inner.edge_weights)

    def _value(self, mask):
        return self.base._value(mask | self.base_mask)


def make_table(values, nonneg=True):
    return TableFunction(values, nonneg=nonneg)


def make_coverage(universe_weights, covers):
    return CoverageFunction(universe_weights, covers)


def make_cut(n, edges):
    return CutFunction(n, edges)


def augment_with_dummies(f, count):
    return DummyAugmented(f, count)


def shift_out(f, avoid_mask):
    return ShiftedFunction(f, avoid_mask)


def restrict_translate(f, base_mask):
    return TranslatedFunction(f, base_mask)
