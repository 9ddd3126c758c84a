"""Acceptance suite: one test per criterion, one printed line per criterion.

Run with ``pytest tests/test_acceptance.py -v -s``.  Headline approximation
ratios of the underlying method bind only asymptotically in epsilon, where
exact evaluation is intractable, so acceptance rests on exact structural
invariants plus the per-step inequalities, which hold for every epsilon;
the end-to-end quality gate is an empirical ratio floor on the fixed seed
set, recorded as such.
"""

import copy
import math
import os
import random
import subprocess
import sys
import time

import numpy as np

from submax import (AugmentedMatroid, KnapsackInstance, UnionDistribution,
                    augment_with_dummies, brute_force_opt,
                    coordinate_derivative, expected_value, join,
                    make_coverage, make_uniform, marginal, mc_estimate,
                    prob_sum, relax, solve_knapsack, solve_matroid)
from submax.extension import substitute
from submax.ground import bit, popcount
from submax.instances import generate_instance, parse_instance
from submax.setfn import restrict_translate
from submax.verify import (check_dmcg_rows, check_knapsack_split_bound,
                           check_pipage_contract, check_polytope,
                           check_rounding_info, check_split_bound,
                           check_stationarity, check_trace, violations)

from conftest import random_function, random_vector, weight_of

MATROID_SEEDS = list(range(50))
KNAPSACK_SEEDS = list(range(50))
MATROID_FAMILIES = ["coverage-uniform", "cut-uniform", "table-uniform",
                    "coverage-partition", "cut-partition", "table-partition",
                    "coverage-graphic", "cut-graphic", "table-graphic"]
KNAPSACK_FAMILIES = ["coverage-knapsack", "cut-knapsack", "table-knapsack"]


def _report(name, ok, detail=""):
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def test_criterion_eme_exactness_montecarlo():
    rng = random.Random(101)
    t0 = time.monotonic()
    worst = 0.0
    for case in range(200):
        n = rng.randint(3, 10)
        f = random_function(rng, n)
        y = random_vector(rng, n, max_coords=min(10, 2 * n))
        assert y.frac <= 10
        exact = expected_value(f, y, counted=False)
        mean, se = mc_estimate(f, y, 100000, seed=case)
        dev = abs(mean - exact)
        # zero-variance cases compare to arithmetic dust
        limit = 4 * se + 1e-12 * max(1.0, abs(exact))
        assert dev <= limit, (case, dev, se)
        if se > 0:
            worst = max(worst, dev / se)
    elapsed = time.monotonic() - t0
    _report("relaxation-exactness", elapsed < 60.0,
            f"200 vectors, worst {worst:.2f} sigma, {elapsed:.1f}s")


def test_criterion_eme_identities():
    rng = random.Random(202)
    bad = 0
    for case in range(500):
        n = rng.randint(3, 8)
        f = random_function(rng, n)
        y = random_vector(rng, n, max_coords=6, allow_sure=False)
        s = rng.randint(1, (1 << n) - 1)
        t = rng.randint(1, (1 << n) - 1) & ~s

        # slope identity via endpoint evaluation
        p = y.coordinate(s)
        hi = expected_value(f, substitute(y, s, 1.0), counted=False)
        lo = expected_value(f, substitute(y, s, 0.0), counted=False)
        deriv = coordinate_derivative(f, y, s)
        if abs((1.0 - p) * deriv - (1.0 - p) * (hi - lo)) > 1e-9:
            bad += 1
        joined = expected_value(f, join(y, s), counted=False)
        base = expected_value(f, y, counted=False)
        if abs((1.0 - p) * deriv - (joined - base)) > 1e-9:
            bad += 1

        # per-coordinate affinity, three-point collinearity
        mid = expected_value(f, substitute(y, s, 0.5), counted=False)
        if abs(mid - 0.5 * (hi + lo)) > 1e-9:
            bad += 1

        # cross second difference for disjoint coordinates
        if t:
            f11 = expected_value(f, substitute(substitute(y, s, 1.0), t, 1.0),
                                 counted=False)
            f10 = expected_value(f, substitute(substitute(y, s, 1.0), t, 0.0),
                                 counted=False)
            f01 = expected_value(f, substitute(substitute(y, s, 0.0), t, 1.0),
                                 counted=False)
            f00 = expected_value(f, substitute(substitute(y, s, 0.0), t, 0.0),
                                 counted=False)
            if f11 - f10 - f01 + f00 > 1e-9:
                bad += 1

        # marginal homomorphism of the probabilistic sum
        y2 = random_vector(rng, n, max_coords=4, allow_sure=False)
        su = prob_sum(y, y2)
        for u in range(n):
            a, b = marginal(y, u), marginal(y2, u)
            if abs(marginal(su, u) - (1.0 - (1.0 - a) * (1.0 - b))) > 1e-12:
                bad += 1
    _report("relaxation-identities", bad == 0, f"500 cases, {bad} violations")


def test_criterion_relax_contract():
    rng = random.Random(303)
    bad = 0
    for case in range(200):
        n = rng.randint(3, 8)
        f = random_function(rng, n)
        y = random_vector(rng, n, max_coords=6)
        u = rng.randrange(n)
        r = relax(y, u)
        if r.frac > y.frac + 1:
            bad += 1
        for v in range(n):
            if abs(marginal(r, v) - marginal(y, v)) > 1e-12:
                bad += 1
        before = expected_value(f, y, counted=False)
        after = expected_value(f, r, counted=False)
        if after < before - 1e-9:
            bad += 1
    _report("relax-contract", bad == 0, f"200 cases, {bad} violations")


def _matroid_instance(i):
    family = MATROID_FAMILIES[i % len(MATROID_FAMILIES)]
    n = 6 + 2 * ((i // 3) % 3)
    obj = generate_instance(family, n, 1000 + i)
    f, M = parse_instance(obj)
    return family, f, M


def test_criterion_matroid_suite():
    t0 = time.monotonic()
    worst_ratio = math.inf
    for i in MATROID_SEEDS:
        family, f, M = _matroid_instance(i)
        res = solve_matroid(M, f, epsilon=0.5, switch_time=0.372)
        opt = brute_force_opt(f, M)
        r = M.rank
        fa = augment_with_dummies(f, r)
        Ma = AugmentedMatroid(M, r)

        # (a) stationarity of the reference basis against every independent T
        rows = check_stationarity(res.reference, Ma, fa,
                                  res.config.epsilon, opt)
        assert not violations(rows), (family, i, violations(rows)[:2])

        # (b) split output structure and the brute-forced direction bound
        for row in res.trace.rows:
            union = 0
            for p in row.parts:
                assert union & p == 0
                union |= p
            assert popcount(union) == Ma.rank
            assert Ma.peek_independent(union)
        rows = check_split_bound(fa, Ma, res.trace)
        assert not violations(rows), (family, i, violations(rows)[:2])

        # (c) final marginals inside the matroid polytope
        rows = check_polytope(Ma, res.y)
        assert not violations(rows), (family, i)

        # (d)+(e) support growth, marginal caps, per-iteration gain
        rows = check_trace(fa, Ma, opt, res.trace)
        assert not violations(rows), (family, i, violations(rows)[:2])

        # (f) rounding contract
        rows = check_pipage_contract(fa, M, res.pipage_set,
                                     res.fractional_value)
        assert not violations(rows), (family, i)

        ratio = 1.0 if opt.opt_value <= 0 else res.final_value / opt.opt_value
        worst_ratio = min(worst_ratio, ratio)
    elapsed = time.monotonic() - t0
    # (g) empirical ratio floor on the fixed seed set (recorded, not a theorem)
    _report("matroid-suite", worst_ratio >= 0.30 and elapsed < 600.0,
            f"50 instances, worst ratio {worst_ratio:.3f}, {elapsed:.1f}s")


def _knapsack_instance(i):
    family = KNAPSACK_FAMILIES[i % len(KNAPSACK_FAMILIES)]
    n = 6 + 2 * ((i // 3) % 3)
    obj = generate_instance(family, n, 2000 + i)
    f, inst = parse_instance(obj)
    return family, f, inst


def test_criterion_knapsack_suite():
    t0 = time.monotonic()
    worst_ratio = math.inf
    vacuous = 0
    checked = 0
    for i in KNAPSACK_SEEDS:
        family, f, inst = _knapsack_instance(i)
        enum_cap = i % 3
        res = solve_knapsack(f, inst, epsilon=0.5, enum_cap=enum_cap)
        eps = res.config.epsilon

        for o in res.outcomes:
            # (a) weighted marginal mass within the reserved budget, exactly
            assert o.mass_slack >= 0.0, (family, i, o.prefix)
            # (b) weighted-sum conservation along every exchange
            assert o.max_mass_delta <= 1e-9, (family, i, o.prefix)
            # (c) midpoint convexity witness per exchange
            assert o.min_convexity_slack >= -1e-9, (family, i, o.prefix)
            # (d) bounded fractional-support growth in rounding
            assert o.frac_growth <= 2, (family, i, o.prefix)
            # (f) overshoot margin of the rounding budget
            assert o.overshoot_margin >= 0.0, (family, i, o.prefix)
            assert o.density_monotone_slack >= -1e-9, (family, i, o.prefix)

        # (f) final feasibility with the reserve accounting
        assert weight_of(inst.weights, res.final_set) <= inst.budget

        # (a)+(d) per-iteration replay on the winning run
        prefix = res.prefix
        room = inst.budget - weight_of(inst.weights, prefix)
        g = restrict_translate(f, prefix)
        rows = check_dmcg_rows(g, inst.weights, (1 - res.config.epsilon) * room,
                               res.config, res.winning_rows)
        assert not violations(rows), (family, i, violations(rows)[:2])

        # (e) split-lemma bound with brute-forced Q on the winning run
        filter_mask = 0
        for u in range(f.ground.n_real):
            if not prefix >> u & 1 and inst.weights[u] <= eps * room:
                filter_mask |= bit(u)
        residual = KnapsackInstance(inst.weights, (1 - eps) * room) \
            if (1 - eps) * room > 0 else None
        q_mask = 0
        if residual is not None:
            feas = [m for m in range(1 << f.ground.n_real)
                    if not m & ~filter_mask
                    and weight_of(inst.weights, m) <= residual.budget]
            vals = g.peek_many(np.asarray(feas, dtype=np.uint64))
            q_mask = feas[int(np.argmax(vals))]
        prev_y = UnionDistribution.zero(cap=res.config.frac_cap)
        for row in res.winning_rows:
            rows = check_knapsack_split_bound(
                g, inst.weights, (1 - eps) * room, res.config.ell,
                filter_mask, row.parts, prev_y, q_mask, iteration=row.i)
            assert not violations(rows), (family, i, rows)
            checked += 1
            vacuous += sum(1 for r in rows if r.get("vacuous"))
            prev_y = row.y

        opt = brute_force_opt(f, inst)
        ratio = 1.0 if opt.opt_value <= 0 else res.final_value / opt.opt_value
        worst_ratio = min(worst_ratio, ratio)
    elapsed = time.monotonic() - t0
    # (g) empirical ratio floor on the fixed seed set (recorded, not a theorem)
    _report("knapsack-suite",
            worst_ratio >= 0.30 and elapsed < 600.0,
            f"50 instances, worst ratio {worst_ratio:.3f}, "
            f"{vacuous}/{checked} split rows vacuous, {elapsed:.1f}s")


def test_criterion_determinism(tmp_path):
    outputs = {}
    for threads in ("1", "4"):
        for rep in ("a", "b"):
            out = tmp_path / f"suite_{threads}_{rep}"
            env = dict(os.environ)
            env["SUBMAX_THREADS"] = threads
            r = subprocess.run(
                [sys.executable, "-m", "submax.cli", "suite", "--seed", "0",
                 "--count", "6", "--out-dir", str(out)],
                env=env, capture_output=True, text=True)
            assert r.returncode == 0, r.stderr
            blob = {p.name: p.read_bytes() for p in out.iterdir()}
            outputs[(threads, rep)] = blob
    first = outputs[("1", "a")]
    ok = all(blob == first for blob in outputs.values())
    _report("determinism", ok,
            f"{len(first)} files byte-identical across reruns and threads 1/4")


def test_criterion_query_accounting():
    # evaluations scale linearly with n*r; raw queries add only the
    # epsilon-bounded 2**frac enumeration factor (frac <= ell * steps = 16)
    per_nr = {}
    raw_ratio = 0.0
    for n in (6, 8, 10):
        for r in (2, 3):
            worst_e = 0
            worst_q = 0
            for seed in range(3):
                obj = generate_instance("cut-uniform", n, 3000 + seed)
                f, _ = parse_instance(obj)
                M = make_uniform(n, r)
                res = solve_matroid(M, f)
                worst_e = max(worst_e, res.queries["greedy_evaluations"])
                worst_q = max(worst_q, res.queries["greedy_value"])
            per_nr[(n, r)] = worst_e / (n * r)
            raw_ratio = max(raw_ratio, worst_q / (n * r))
    spread = max(per_nr.values()) / min(per_nr.values())
    c_eval = max(per_nr.values())
    frac_limit = 2 * 8  # ell * steps at epsilon 0.5
    ok = spread <= 2.0 and c_eval <= 40.0 and \
        raw_ratio <= c_eval * (1 << frac_limit)
    _report("query-accounting", ok,
            f"evaluations/(n*r) in [{min(per_nr.values()):.1f}, "
            f"{c_eval:.1f}], spread {spread:.2f}, "
            f"raw C = {raw_ratio:.0f}")


def test_criterion_negative_controls():
    rng = random.Random(404)
    flags = []

    # corrupted greedy trace: one objective value decremented
    family, f, M = _matroid_instance(4)
    res = solve_matroid(M, f)
    opt = brute_force_opt(f, M)
    fa = augment_with_dummies(f, M.rank)
    Ma = AugmentedMatroid(M, M.rank)
    bad_trace = copy.deepcopy(res.trace)
    bad_trace.rows[3].value -= 0.25
    flags.append(bool(violations(check_trace(fa, Ma, opt, bad_trace))))

    # non-stationary reference on a modular objective
    g = make_coverage([9, 1, 1, 1], [[0], [1], [2], [3]])
    Mg = make_uniform(4, 1)
    ga = augment_with_dummies(g, 1)
    Mga = AugmentedMatroid(Mg, 1)
    gopt = brute_force_opt(g, Mg)
    flags.append(bool(violations(
        check_stationarity(bit(1), Mga, ga, 0.01, gopt))))

    # marginals outside the polytope
    bad_y = UnionDistribution({0b001: 0.75, 0b010: 0.75})
    flags.append(bool(violations(
        check_polytope(AugmentedMatroid(make_uniform(3, 1), 1), bad_y))))

    # rounding ledger corruptions: conservation, frac growth, value
    f2, inst2 = parse_instance(generate_instance("coverage-knapsack", 6, 7))[0], \
        parse_instance(generate_instance("coverage-knapsack", 6, 7))[1]
    res2 = solve_knapsack(f2, inst2, enum_cap=1)
    info = res2.winning_rounding
    room = inst2.budget - weight_of(inst2.weights, res2.prefix)
    clean = check_rounding_info(info, 0.5, room, inst2.weights,
                                res2.final_set & ~res2.prefix)
    assert not violations(clean)
    for mutate in (
            lambda i: setattr(i, "max_frac", i.initial_frac + 3),
            lambda i: setattr(i, "kept_value", i.fractional_value - 1.0)):
        bad = copy.deepcopy(info)
        mutate(bad)
        flags.append(bool(violations(check_rounding_info(
            bad, 0.5, room, inst2.weights, res2.final_set & ~res2.prefix))))

    # split-lemma checker: empty parts claimed despite room
    g3 = make_coverage([4, 4, 4, 4], [[0], [1], [2], [3]])
    flags.append(bool(violations(check_knapsack_split_bound(
        g3, [1, 1, 1, 1], 4.0, 2, 0b1111, [0, 0],
        UnionDistribution.zero()))))

    # optimizer-row checker: corrupted weighted mass
    g4 = restrict_translate(f2, res2.prefix)
    room2 = inst2.budget - weight_of(inst2.weights, res2.prefix)
    bad_rows = copy.deepcopy(res2.winning_rows)
    bad_rows[-1].weighted_mass += 10.0
    flags.append(bool(violations(check_dmcg_rows(
        g4, inst2.weights, (1 - 0.5) * room2, res2.config, bad_rows))))

    # pipage contract checker: wrong set with inflated target
    flags.append(bool(violations(check_pipage_contract(
        fa, M, 0, res.fractional_value + 100.0))))

    # exactness checker: corrupted exact value beyond four sigma
    f4 = random_function(rng, 5)
    y4 = random_vector(rng, 5, 4)
    mean, se = mc_estimate(f4, y4, 100000, seed=1)
    exact = expected_value(f4, y4, counted=False)
    flags.append(abs(mean - (exact + 1.0)) > 4 * se + 1e-12)

    ok = all(flags)
    _report("negative-controls", ok,
            f"{sum(flags)}/{len(flags)} corrupted fixtures flagged")
