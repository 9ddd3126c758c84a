import math
import random

import pytest

from submax import (AugmentedMatroid, ContractViolation, UnionDistribution,
                    augment_with_dummies, brute_force_opt, make_config,
                    make_coverage, make_graphic, make_partition, make_uniform,
                    marginals, pipage_round, shift_out, solve_matroid)
from submax.errors import ConfigError
from submax.ground import mask_of, popcount
from submax.matroid_solver import continuous_greedy, local_search, split
from submax.verify import violations, check_split_bound, check_trace

from conftest import random_function


def modular(weights):
    """Modular objective: element u covers its own unit item of weight w_u."""
    return make_coverage(list(weights), [[u] for u in range(len(weights))])


class DirectEvaluator:
    """Adapter presenting a plain oracle as a split evaluator."""

    def __init__(self, f):
        self.f = f

    def value(self, mask):
        return self.f.value(mask)

    def value_many(self, masks):
        return self.f.value_many(list(masks))


def test_config_grid_snapping():
    c = make_config(0.5, 0.372)
    assert (c.ell, c.steps, c.delta) == (2, 8, 0.125)
    assert c.switch_steps == 2 and c.switch_time == 0.25
    assert c.epsilon == 0.5
    c3 = make_config(1 / 3, 0.372, frac_cap=200)
    assert (c3.ell, c3.steps) == (3, 27)
    assert c3.switch_steps == 10


def test_config_refuses_small_epsilon_without_cap():
    with pytest.raises(ConfigError):
        make_config(0.2)
    make_config(0.2, frac_cap=700)  # explicit cap accepted


def test_local_search_modular_returns_top_k():
    f = modular([5, 9, 1, 7, 3])
    M = make_uniform(5, 2)
    fa = augment_with_dummies(f, 2)
    Ma = AugmentedMatroid(M, 2)
    Z, info = local_search(Ma, fa, make_config(0.5))
    assert Z & Ma.ground.real_mask == mask_of([1, 3])


def test_local_search_stationarity_exhaustive(rng):
    cfg = make_config(0.5)
    for _ in range(10):
        n = rng.randint(4, 7)
        f = random_function(rng, n)
        M = make_uniform(n, rng.randint(1, 3))
        fa = augment_with_dummies(f, M.rank)
        Ma = AugmentedMatroid(M, M.rank)
        Z, info = local_search(Ma, fa, cfg)
        assert Ma.peek_independent(Z) and popcount(Z) == M.rank
        opt = brute_force_opt(f, M)
        fz = fa.peek(Z)
        for t in range(1 << n):
            if not M.peek_independent(t):
                continue
            rhs = 0.5 * (fa.peek(Z & t) + fa.peek(Z | t)) \
                - cfg.epsilon * opt.opt_value
            assert fz >= rhs - 1e-9


def test_local_search_iteration_bound(rng):
    cfg = make_config(0.5)
    for _ in range(10):
        n = rng.randint(4, 7)
        f = random_function(rng, n)
        M = make_uniform(n, 2)
        fa = augment_with_dummies(f, 2)
        Ma = AugmentedMatroid(M, 2)
        Z, info = local_search(Ma, fa, cfg)
        opt = brute_force_opt(f, M)
        if info.initializer_value > 0:
            c0 = info.initializer_value / opt.opt_value
            bound = math.ceil(4 * M.rank / (cfg.epsilon * c0))
            assert info.iterations <= bound


def test_split_single_part_is_greedy_basis(rng):
    f = random_function(rng, 6)
    M = make_uniform(6, 3)
    fa = augment_with_dummies(f, 3)
    Ma = AugmentedMatroid(M, 3)
    parts = split(Ma, DirectEvaluator(fa), 1)
    assert len(parts) == 1
    union = parts[0]
    assert popcount(union) == 3 and Ma.peek_independent(union)


def test_split_parts_disjoint_union_basis(rng):
    for _ in range(10):
        n = rng.randint(4, 7)
        f = random_function(rng, n)
        M = make_uniform(n, rng.randint(1, 3))
        fa = augment_with_dummies(f, M.rank)
        Ma = AugmentedMatroid(M, M.rank)
        parts = split(Ma, DirectEvaluator(fa), 2)
        union = 0
        for p in parts:
            assert union & p == 0
            union |= p
        assert popcount(union) == Ma.rank
        assert Ma.peek_independent(union)


def test_split_corollary_bound_brute_forced(rng):
    # total gain >= (1 - 2 eps) f(O) - (1 - eps) f(empty) for every O
    ell = 2
    eps = 1.0 / ell
    for _ in range(10):
        n = rng.randint(4, 6)
        f = random_function(rng, n)
        M = make_uniform(n, rng.randint(1, 3))
        fa = augment_with_dummies(f, M.rank)
        Ma = AugmentedMatroid(M, M.rank)
        parts = split(Ma, DirectEvaluator(fa), ell)
        lhs = sum(fa.peek(p) - fa.peek(0) for p in parts)
        for o in range(1 << n):
            if not M.peek_independent(o):
                continue
            rhs = (1 - 2 * eps) * fa.peek(o) - (1 - eps) * fa.peek(0)
            assert lhs >= rhs - 1e-9


def test_split_avoids_shifted_set(rng):
    for _ in range(10):
        n = rng.randint(5, 7)
        f = random_function(rng, n)
        M = make_uniform(n, 3)
        fa = augment_with_dummies(f, 3)
        Ma = AugmentedMatroid(M, 3)
        z = mask_of(rng.sample(range(n), 3))
        s = shift_out(fa, z)
        parts = split(Ma, DirectEvaluator(s), 2)
        for p in parts:
            assert p & z == 0


def test_continuous_greedy_constant_objective(rng):
    const = make_coverage([], [[] for _ in range(4)])  # constant zero
    M = make_uniform(4, 2)
    fa = augment_with_dummies(const, 2)
    Ma = AugmentedMatroid(M, 2)
    y, trace = continuous_greedy(Ma, fa, 0, make_config(0.5))
    for row in trace.rows:
        assert row.value == fa.peek(0)
    opt = brute_force_opt(const, M)
    rows = check_trace(fa, Ma, opt, trace)
    assert not violations(rows)


def test_continuous_greedy_trace_invariants(rng):
    cfg = make_config(0.5, 0.372)
    for _ in range(6):
        n = rng.randint(5, 8)
        f = random_function(rng, n)
        M = make_uniform(n, 2)
        fa = augment_with_dummies(f, 2)
        Ma = AugmentedMatroid(M, 2)
        Z, _ = local_search(Ma, fa, cfg)
        y, trace = continuous_greedy(Ma, fa, Z, cfg)
        opt = brute_force_opt(f, M)
        rows = check_trace(fa, Ma, opt, trace)
        assert not violations(rows), violations(rows)[:3]
        mar = marginals(y, Ma.ground.n_total)
        assert Ma.in_polytope(mar)
        rows2 = check_split_bound(fa, Ma, trace)
        assert not violations(rows2), violations(rows2)[:3]


def test_pipage_integral_vector_is_identity(rng):
    f = random_function(rng, 5)
    M = make_uniform(5, 3)
    fa = augment_with_dummies(f, 3)
    Ma = AugmentedMatroid(M, 3)
    y = UnionDistribution({}, sure=0b101)
    s, info = pipage_round(Ma, fa, y)
    assert s == 0b101
    assert info.rounded_value == fa.peek(0b101)


def test_pipage_uniform_k1_takes_better_singleton():
    f = modular([2.0, 6.0])
    M = make_uniform(2, 1)
    fa = augment_with_dummies(f, 1)
    Ma = AugmentedMatroid(M, 1)
    y = UnionDistribution({0b01: 0.5, 0b10: 0.5})
    s, info = pipage_round(Ma, fa, y)
    assert s == 0b10
    # modular objective: the relaxed value is the average of the two singletons
    assert info.fractional_value == pytest.approx(0.5 * (2.0 + 6.0))
    assert info.rounded_value == 6.0
    assert info.rounded_value >= info.fractional_value


def test_pipage_contract_on_seeded_runs(rng):
    cfg = make_config(0.5)
    matroids = [
        lambda n, r: make_uniform(n, r),
        lambda n, r: make_partition(n, [(mask_of(range(0, n, 2)), 1),
                                        (mask_of(range(1, n, 2)),
                                         max(1, r - 1))]),
    ]
    for trial in range(100):
        n = rng.randint(4, 7)
        r = rng.randint(1, 3)
        f = random_function(rng, n)
        if trial % 3 == 2:
            edges = []
            for _ in range(n):
                a = rng.randrange(r + 1)
                b = rng.randrange(r + 1)
                while b == a:
                    b = rng.randrange(r + 1)
                edges.append((a, b))
            M = make_graphic(r + 1, edges)
        else:
            M = matroids[trial % 3](n, r)
        if M.rank == 0:
            continue
        fa = augment_with_dummies(f, M.rank)
        Ma = AugmentedMatroid(M, M.rank)
        Z, _ = local_search(Ma, fa, cfg)
        y, _ = continuous_greedy(Ma, fa, Z, cfg)
        s, info = pipage_round(Ma, fa, y)
        assert M.peek_independent(s)
        assert info.rounded_value >= info.fractional_value - 1e-9


def test_pipage_rejects_outside_polytope():
    f = modular([1.0, 1.0])
    M = make_uniform(2, 1)
    fa = augment_with_dummies(f, 1)
    Ma = AugmentedMatroid(M, 1)
    y = UnionDistribution({0b01: 0.75, 0b10: 0.75})
    with pytest.raises(ContractViolation):
        pipage_round(Ma, fa, y)


def test_solve_matroid_modular_matches_brute_force(rng):
    f = modular([4, 1, 8, 2, 6, 3])
    M = make_uniform(6, 3)
    res = solve_matroid(M, f)
    opt = brute_force_opt(f, M)
    assert res.final_value == opt.opt_value
    assert res.final_set == opt.opt_set


def test_solve_matroid_deterministic_rerun(rng):
    f1 = random_function(random.Random(99), 7)
    f2 = random_function(random.Random(99), 7)
    M1 = make_uniform(7, 3)
    M2 = make_uniform(7, 3)
    r1 = solve_matroid(M1, f1)
    r2 = solve_matroid(M2, f2)
    assert r1.final_set == r2.final_set
    assert r1.final_value == r2.final_value
    assert r1.queries == r2.queries
    assert [row.value for row in r1.trace.rows] == \
        [row.value for row in r2.trace.rows]


def test_solve_matroid_ratio_reported(rng):
    f = random_function(rng, 7)
    M = make_uniform(7, 2)
    res = solve_matroid(M, f)
    opt = brute_force_opt(f, M)
    assert res.final_value <= opt.opt_value + 1e-9
    assert res.final_value / opt.opt_value >= 0.3
