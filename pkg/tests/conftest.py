"""Shared helpers: seeded generators and test-local reference oracles.

The reference oracles here are deliberately naive (itertools enumeration,
dict arithmetic) and never share code with the package's evaluation paths;
they are the independent side of every dual-route check.
"""

import itertools
import random

import pytest

from submax import UnionDistribution, make_coverage, make_cut
from submax.ground import iter_bits


def random_coverage(rng, n, n_universe=None):
    n_universe = n_universe or n + 2
    weights = [rng.randint(1, 9) for _ in range(n_universe)]
    covers = [sorted(rng.sample(range(n_universe), rng.randint(1, 3)))
              for _ in range(n)]
    return make_coverage(weights, covers)


def random_cut(rng, n):
    edges = []
    for a in range(n):
        for b in range(a + 1, n):
            if rng.random() < 0.5:
                edges.append((a, b, rng.randint(1, 9)))
    if not edges:
        edges.append((0, 1, 1))
    return make_cut(n, edges)


def random_function(rng, n):
    return random_coverage(rng, n) if rng.random() < 0.5 else random_cut(rng, n)


def random_vector(rng, n, max_coords, cap=24, allow_sure=True):
    """Random fractional vector over subsets of [0, n)."""
    coords = {}
    for _ in range(rng.randint(1, max_coords)):
        mask = rng.randint(1, (1 << n) - 1)
        if mask in coords:
            continue
        coords[mask] = rng.choice([0.125, 0.25, 0.375, 0.5, 0.625, 0.75])
    sure = rng.randint(0, (1 << n) - 1) if allow_sure and rng.random() < 0.3 else 0
    return UnionDistribution(coords, sure, cap)


def reference_expectation(f, y):
    """Brute-force expectation by itertools enumeration; independent path."""
    total = 0.0
    coords = y.coords
    for pattern in itertools.product([0, 1], repeat=len(coords)):
        m = y.sure
        w = 1.0
        for inc, (mask, p) in zip(pattern, coords):
            if inc:
                m |= mask
                w *= p
            else:
                w *= 1.0 - p
        total += w * f.peek(m)
    return total


def reference_marginal(y, u):
    keep = 1.0
    if (y.sure >> u) & 1:
        return 1.0
    for mask, p in y.coords:
        if (mask >> u) & 1:
            keep *= 1.0 - p
    return 1.0 - keep


def reference_opt(f, feasible):
    """Max of f over an explicit iterable of masks; first max wins."""
    best_v, best_m = None, None
    for m in feasible:
        v = f.peek(m)
        if best_v is None or v > best_v:
            best_v, best_m = v, m
    return best_v, best_m


def exhaustive_submodular(f, n, tol=1e-9):
    for a in range(1 << n):
        for b in range(1 << n):
            if f.peek(a) + f.peek(b) < f.peek(a | b) + f.peek(a & b) - tol:
                return False
    return True


def weight_of(weights, mask):
    return sum(weights[u] for u in iter_bits(mask))


@pytest.fixture
def rng():
    return random.Random(20240817)
