"""Matroid independence oracles: uniform, partition, graphic, augmented.

Independence queries are counted on a counter separate from value queries,
mirroring the two-oracle accounting of the solvers.  ``peek_independent``
and the polytope / rank-table helpers are uncounted and reserved for
verification code.

The dummy-augmented matroid appends zero-marginal tail elements: a set is
independent iff its real part is independent in the base matroid and its
total size is at most the base rank.  This makes every independent set
completable to a basis without changing objective values.
"""

import numpy as np

from .errors import ContractViolation, InstanceError
from .ground import GroundSet, bit, iter_bits, popcount
from .setfn import QueryCounter

POLYTOPE_SCAN_CAP = 20


class Matroid:
    def __init__(self, ground, counter=None):
        self.ground = ground
        self.counter = counter if counter is not None else QueryCounter()
        self._rank = None
        self._rank_table_cache = None

    def is_independent(self, mask):
        self.counter.add(1)
        return self._indep(mask)

    def peek_independent(self, mask):
        return self._indep(mask)

    def _indep(self, mask):
        raise NotImplementedError

    @property
    def rank(self):
        """Rank of the full ground set (uncounted structural constant)."""
        if self._rank is None:
            self._rank = self._greedy_rank(self.ground.full_mask)
        return self._rank

    def _greedy_rank(self, mask):
        cur = 0
        for u in iter_bits(mask):
            if self._indep(cur | bit(u)):
                cur |= bit(u)
        return popcount(cur)

    def rank_of(self, mask):
        """Greedy closure size, elements scanned in ascending id (counted)."""
        cur = 0
        for u in iter_bits(mask):
            self.counter.add(1)
            if self._indep(cur | bit(u)):
                cur |= bit(u)
        return popcount(cur)

    def rank_table(self):
        """rank_of for every subset, uncounted; desk-scale scan."""
        n = self.ground.n_total
        if n > POLYTOPE_SCAN_CAP:
            raise InstanceError(
                f"rank table over {n} elements exceeds cap {POLYTOPE_SCAN_CAP}")
        if self._rank_table_cache is None:
            table = np.empty(1 << n, dtype=np.int64)
            for m in range(1 << n):
                table[m] = self._greedy_rank(m)
            self._rank_table_cache = table
        return self._rank_table_cache

    def in_polytope(self, x, tol=1e-9):
        """Exact rank-inequality scan: sum of x over A <= rank(A) for all A."""
        x = np.asarray(x, dtype=np.float64)
        n = self.ground.n_total
        if x.shape[0] != n:
            raise InstanceError("marginal vector length does not match ground set")
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        ranks = self.rank_table()
        idx = np.arange(1 << n, dtype=np.uint64)
        sums = np.zeros(1 << n, dtype=np.float64)
        for u in range(n):
            sums += x[u] * ((idx >> np.uint64(u)) & np.uint64(1)).astype(np.float64)
        return bool(np.all(sums <= ranks + tol))


class UniformMatroid(Matroid):
    def __init__(self, n, k, counter=None):
        if not 0 <= k <= n:
            raise InstanceError(f"uniform rank {k} outside [0, {n}]")
        super().__init__(GroundSet(n), counter)
        self.k = k
        self._rank = k

    def _indep(self, mask):
        return popcount(mask & self.ground.full_mask) <= self.k

    def in_polytope(self, x, tol=1e-9):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        return bool(np.sum(x) <= self.k + tol)


class PartitionMatroid(Matroid):
    """Per-part cardinality caps; elements in no part are unconstrained."""

    def __init__(self, n, parts, counter=None):
        seen = 0
        for mask, cap in parts:
            if mask & ~((1 << n) - 1):
                raise InstanceError("part members outside ground set")
            if mask & seen:
                raise InstanceError("overlapping parts")
            if cap < 0:
                raise InstanceError("negative part capacity")
            seen |= mask
        super().__init__(GroundSet(n), counter)
        self.parts = tuple((int(m), int(c)) for m, c in parts)
        self.free_mask = ((1 << n) - 1) & ~seen
        self._rank = sum(min(popcount(m), c) for m, c in self.parts) \
            + popcount(self.free_mask)

    def _indep(self, mask):
        mask &= self.ground.full_mask
        return all(popcount(mask & m) <= c for m, c in self.parts)

    def in_polytope(self, x, tol=1e-9):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        for m, c in self.parts:
            if sum(x[u] for u in iter_bits(m)) > c + tol:
                return False
        return True


class GraphicMatroid(Matroid):
    """Elements are edges of a multigraph; independent = acyclic."""

    def __init__(self, n_vertices, edges, counter=None):
        for a, b in edges:
            if not (0 <= a < n_vertices and 0 <= b < n_vertices):
                raise InstanceError(f"edge ({a},{b}) outside vertex range")
        super().__init__(GroundSet(len(edges)), counter)
        self.n_vertices = n_vertices
        self.edges = tuple((int(a), int(b)) for a, b in edges)

    def _indep(self, mask):
        parent = list(range(self.n_vertices))

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for e in iter_bits(mask & self.ground.full_mask):
            a, b = self.edges[e]
            if a == b:
                return False
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            parent[ra] = rb
        return True


class AugmentedMatroid(Matroid):
    """Base matroid plus zero-marginal dummies, capped at the base rank."""

    def __init__(self, base, n_dummy):
        if base.ground.n_dummy:
            raise InstanceError("base matroid already augmented")
        super().__init__(GroundSet(base.ground.n_total, n_dummy), base.counter)
        self.base = base
        self._rank = base.rank

    def _indep(self, mask):
        mask &= self.ground.full_mask
        if popcount(mask) > self.base.rank:
            return False
        return self.base._indep(mask & self.ground.real_mask)

    def in_polytope(self, x, tol=1e-9):
        x = np.asarray(x, dtype=np.float64)
        if np.any(x < -tol) or np.any(x > 1 + tol):
            return False
        if np.sum(x) > self.base.rank + tol:
            return False
        return self.base.in_polytope(x[:self.ground.n_real], tol)


def make_uniform(n, k):
    return UniformMatroid(n, k)


def make_partition(n, parts):
    return PartitionMatroid(n, parts)


def make_graphic(n_vertices, edges):
    return GraphicMatroid(n_vertices, edges)


def complete_to_basis(M, mask, f=None):
    """Deterministically extend an independent set to a basis.

    Prefers the lowest-id real elements whose marginal value (when an
    oracle is supplied) is non-negative, then fills with dummies, then
    with any remaining feasible element.
    """
    if not M.is_independent(mask):
        raise ContractViolation("completion called on a dependent set")
    r = M.rank
    cur = int(mask)
    for u in range(M.ground.n_real):
        if popcount(cur) >= r:
            break
        ub = bit(u)
        if cur & ub or not M.is_independent(cur | ub):
            continue
        if f is not None and f.value(cur | ub) - f.value(cur) < 0:
            continue
        cur |= ub
    for u in range(M.ground.n_real, M.ground.n_total):
        if popcount(cur) >= r:
            break
        ub = bit(u)
        if M.is_independent(cur | ub):
            cur |= ub
    for u in range(M.ground.n_real):
        if popcount(cur) >= r:
            break
        ub = bit(u)
        if not cur & ub and M.is_independent(cur | ub):
            cur |= ub
    if popcount(cur) != r:
        raise ContractViolation("could not complete to a basis")
    return cur
