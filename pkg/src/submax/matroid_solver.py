"""Deterministic matroid pipeline: local search, split, aided greedy, pipage.

Stages, all free of randomness:

1.  ``local_search`` builds a reference basis by 1-exchange moves until no
    swap gains at least (eps/rank) times the initializer's value.  The
    initializer is the better of a greedy basis and the best singleton
    (completed to a basis); its quality only scales the iteration bound,
    not the stationarity guarantee, which depends solely on the exit
    condition.

2.  ``split`` greedily partitions a basis into ``ell`` disjoint parts,
    always adding the feasible (element, part) pair of largest marginal
    gain, ties broken by smallest part index then smallest element id.

3.  ``continuous_greedy`` runs 1/delta steps; each step splits under the
    current fractional point and adds probability delta on every part.
    For the first switch_steps iterations the objective is shifted so the
    reference basis is strictly avoided, steering the trajectory away
    from that stationary point; afterwards all directions are free.

4.  ``pipage_round`` converts the fractional point into an independent
    set worth at least its relaxed value: first every element is folded
    to a singleton coordinate (value never decreases, marginals are
    preserved), then classical pairwise moves walk the marginal vector to
    a vertex of the matroid polytope, each move picking the better
    endpoint of a convex segment.  Uniform and partition matroids pair
    fractional elements inside one part; other matroids find exchange
    bounds by an exhaustive rank-inequality scan, which is exact at desk
    scale.

``solve_matroid`` wires the stages together on a dummy-augmented problem
and returns the better of the rounded set and the reference basis.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, ConfigError, ContractViolation
from .extension import (UnionDistribution, expected_value, marginals,
                        prob_sum, relax, step_vector, union_evaluator)
from .ground import bit, iter_bits, ids_of, popcount
from .matroid import (AugmentedMatroid, PartitionMatroid, UniformMatroid,
                      complete_to_basis)
from .setfn import augment_with_dummies, shift_out


@dataclass(frozen=True)
class AlgoConfig:
    """Grid-snapped solver parameters; every derived field is integral.

    epsilon is snapped to 1/ell; the step count is then ell**3 exactly, so
    1/delta needs no further adjustment; the switch step is floored onto
    the grid.
    """

    epsilon: float
    ell: int
    delta: float
    steps: int
    switch_steps: int
    switch_time: float
    requested_epsilon: float
    requested_switch_time: float
    tolerance: float = 1e-9
    frac_cap: int = 24

    def as_dict(self):
        return {
            "epsilon": self.epsilon, "ell": self.ell, "delta": self.delta,
            "steps": self.steps, "switch_steps": self.switch_steps,
            "switch_time": self.switch_time,
            "requested_epsilon": self.requested_epsilon,
            "requested_switch_time": self.requested_switch_time,
            "tolerance": self.tolerance, "frac_cap": self.frac_cap,
        }


DEFAULT_SWITCH_TIME = 0.372


def make_config(epsilon=0.5, switch_time=DEFAULT_SWITCH_TIME, frac_cap=None,
                tolerance=1e-9):
    if not 0.0 < epsilon < 1.0:
        raise ConfigError(f"epsilon {epsilon} outside (0, 1)")
    if not 0.0 <= switch_time <= 1.0:
        raise ConfigError(f"switch time {switch_time} outside [0, 1]")
    ell = round(1.0 / epsilon)
    if ell < 2:
        # one part would snap epsilon to 1, outside the valid range
        raise ConfigError(
            f"epsilon {epsilon} snaps to a single part; use epsilon <= 2/3")
    eps = 1.0 / ell
    if eps < 0.25 and frac_cap is None:
        raise ConfigError(
            f"epsilon {eps:g} needs fractional support up to {ell ** 4}; "
            "exact evaluation costs 2**frac - pass an explicit frac_cap to "
            "confirm, or use epsilon >= 0.25")
    steps = ell ** 3
    delta = 1.0 / steps
    switch_steps = int(math.floor(switch_time * steps + 1e-9))
    return AlgoConfig(
        epsilon=eps, ell=ell, delta=delta, steps=steps,
        switch_steps=switch_steps, switch_time=switch_steps * delta,
        requested_epsilon=epsilon, requested_switch_time=switch_time,
        tolerance=tolerance,
        frac_cap=24 if frac_cap is None else int(frac_cap))


@dataclass
class LocalSearchInfo:
    initializer_set: int
    initializer_value: float
    threshold: float
    iterations: int


def _greedy_basis(M, f):
    cur = 0
    r = M.rank
    n = M.ground.n_total
    while popcount(cur) < r:
        cands = [u for u in range(n)
                 if not cur >> u & 1 and M.is_independent(cur | bit(u))]
        if not cands:
            break
        vals = f.value_many([cur | bit(u) for u in cands])
        base = f.value(cur)
        best_u, best_gain = None, None
        for u, v in zip(cands, vals):
            gain = float(v) - base
            if best_gain is None or gain > best_gain:
                best_u, best_gain = u, gain
        cur |= bit(best_u)
    return cur


def local_search(M, f, config):
    """Reference basis: no 1-exchange gains (eps/rank) * initializer value."""
    r = M.rank
    n = M.ground.n_total
    greedy = _greedy_basis(M, f)
    singles = [u for u in range(M.ground.n_real) if M.is_independent(bit(u))]
    best_single = 0
    if singles:
        vals = f.value_many([bit(u) for u in singles])
        best_single = bit(singles[int(np.argmax(vals))])
    s0 = greedy
    if best_single and f.value(best_single) > f.value(greedy):
        s0 = best_single
    f_s0 = f.value(s0)
    threshold = (config.epsilon / r) * f_s0 if r else 0.0

    S = complete_to_basis(M, s0, f)
    iterations = 0
    while True:
        fS = f.value(S)
        in_ids = ids_of(S)
        out_ids = [v for v in range(n) if not S >> v & 1]
        f_minus = {u: float(x) for u, x in
                   zip(in_ids, f.value_many([S ^ bit(u) for u in in_ids]))}
        f_plus = {v: float(x) for v, x in
                  zip(out_ids, f.value_many([S | bit(v) for v in out_ids]))}
        best = None  # (gain, u, v)
        for u in in_ids:
            drop = fS - f_minus[u]
            for v in out_ids:
                if not M.is_independent((S ^ bit(u)) | bit(v)):
                    continue
                gain = (f_plus[v] - fS) - drop
                if best is None or gain > best[0]:
                    best = (gain, u, v)
        if best is None or best[0] < threshold or best[0] <= 0.0:
            break
        _, u, v = best
        S = (S ^ bit(u)) | bit(v)
        iterations += 1
    return S, LocalSearchInfo(s0, f_s0, threshold, iterations)


def split(M, g, ell):
    """Disjoint parts whose union is a basis, by greedy max-marginal adds.

    ``g`` exposes value(mask) and value_many(masks).  Ties break to the
    smallest part index, then the smallest element id.
    """
    parts = [0] * ell
    union = 0
    r = M.rank
    n = M.ground.n_total
    g0 = g.value(0)
    cache = [g0] * ell
    while popcount(union) < r:
        cands = [u for u in range(n)
                 if not union >> u & 1 and M.is_independent(union | bit(u))]
        if not cands:
            raise ContractViolation("split cannot reach a basis")
        best = None  # (gain, j, u, value)
        for j in range(ell):
            vals = g.value_many([parts[j] | bit(u) for u in cands])
            for u, v in zip(cands, vals):
                gain = float(v) - cache[j]
                if best is None or gain > best[0]:
                    best = (gain, j, u, float(v))
        _, j, u, val = best
        parts[j] |= bit(u)
        union |= bit(u)
        cache[j] = val
    return parts


@dataclass
class TraceRow:
    i: int
    avoid_mask: int
    parts: list
    y: UnionDistribution
    value: float
    frac: int
    mar_inf: float


@dataclass
class GreedyTrace:
    config: AlgoConfig
    reference: int
    rows: list = field(default_factory=list)


def continuous_greedy(M, f, reference, config):
    """Aided measured greedy over the subset-coordinate relaxation."""
    y = UnionDistribution.zero(cap=config.frac_cap)
    trace = GreedyTrace(config, reference)
    n = M.ground.n_total
    for i in range(1, config.steps + 1):
        avoid = reference if i <= config.switch_steps else 0
        fi = shift_out(f, avoid) if avoid else f
        g = union_evaluator(fi, y)
        parts = split(M, g, config.ell)
        for p in parts:
            if p & avoid:
                raise ContractViolation(
                    "split selected an element of the avoided set")
        try:
            y = prob_sum(y, step_vector(parts, config.delta, config.frac_cap))
        except BudgetError as exc:
            raise BudgetError(exc.frac, exc.cap,
                              "increase epsilon or raise frac_cap") from exc
        value = expected_value(f, y)
        mar = marginals(y, n)
        trace.rows.append(TraceRow(
            i=i, avoid_mask=avoid, parts=list(parts), y=y, value=value,
            frac=y.frac, mar_inf=float(np.max(mar)) if n else 0.0))
    return y, trace


@dataclass
class PipageInfo:
    fractional_value: float
    rounded_value: float
    moves: int


def _singleton_vector(fracs, ones_mask, cap):
    return UnionDistribution({bit(u): p for u, p in fracs.items()},
                             ones_mask, cap)


def _pipage_value(f, fracs, ones_mask, cap):
    return expected_value(f, _singleton_vector(fracs, ones_mask, cap))


def _pair_groups(M_real, n_real):
    """Element groups whose internal exchanges are always feasible."""
    if isinstance(M_real, UniformMatroid):
        return [((1 << n_real) - 1, M_real.k)]
    groups = list(M_real.parts)
    for u in iter_bits(M_real.free_mask):
        groups.append((bit(u), 1))
    return groups


def pipage_round(M, f, y, tolerance=1e-9):
    """Round to an independent set worth at least the fractional value.

    Works on the real elements: dummies are stripped first (they carry no
    value), every remaining element is relaxed to a singleton coordinate,
    and pairwise endpoint moves drive the marginal vector integral.  Ties
    between endpoints prefer the raising direction.
    """
    n_real = M.ground.n_real
    real_mask = M.ground.real_mask
    mar_full = marginals(y, M.ground.n_total)
    if not M.in_polytope(mar_full, tolerance):
        raise ContractViolation("marginal vector outside the matroid polytope")
    target = expected_value(f, y)

    yr = y
    for u in iter_bits(y.covered_mask()):
        yr = relax(yr, u)

    ones_mask = yr.sure & real_mask
    fracs = {}
    for m, p in yr.coords:
        u = m.bit_length() - 1
        if m & real_mask:
            fracs[u] = p
    cap = y.cap
    M_real = M.base if isinstance(M, AugmentedMatroid) else M
    moves = 0

    if isinstance(M_real, (UniformMatroid, PartitionMatroid)):
        groups = _pair_groups(M_real, n_real)
        for gmask, _ in groups:
            while True:
                inside = sorted(u for u in fracs if gmask >> u & 1)
                if len(inside) < 2:
                    break
                u, v = inside[0], inside[1]
                moves += 1
                xu, xv = fracs[u], fracs[v]
                up = _endpoint(fracs, u, v, min(1.0 - xu, xv), raise_u=True)
                dn = _endpoint(fracs, u, v, min(xu, 1.0 - xv), raise_u=False)
                pick = _better_endpoint(f, up, dn, ones_mask, cap)
                fracs = pick
                ones_mask, fracs = _absorb_integral(ones_mask, fracs)
    else:
        ranks = M_real.rank_table()
        idx = np.arange(1 << n_real, dtype=np.uint64)
        guard = 4 * n_real * n_real + 8
        while True:
            frac_ids = sorted(fracs)
            if len(frac_ids) < 2:
                break
            if moves > guard:
                raise ContractViolation("pipage failed to make progress")
            moves += 1
            x = np.zeros(n_real)
            for u in iter_bits(ones_mask):
                x[u] = 1.0
            for u, p in fracs.items():
                x[u] = p
            sums = np.zeros(1 << n_real)
            for u in range(n_real):
                sums += x[u] * ((idx >> np.uint64(u)) & np.uint64(1)).astype(float)
            slack = ranks.astype(np.float64) - sums
            u, v = _pick_pipage_pair(frac_ids, slack, tolerance)
            ub, vb = np.uint64(bit(u)), np.uint64(bit(v))
            with_u = (idx & ub).astype(bool) & ~(idx & vb).astype(bool)
            with_v = (idx & vb).astype(bool) & ~(idx & ub).astype(bool)
            xu, xv = fracs[u], fracs[v]
            t_up = min(1.0 - xu, xv, float(np.min(slack[with_u])))
            t_dn = min(xu, 1.0 - xv, float(np.min(slack[with_v])))
            up = _endpoint(fracs, u, v, max(t_up, 0.0), raise_u=True)
            dn = _endpoint(fracs, u, v, max(t_dn, 0.0), raise_u=False)
            pick = _better_endpoint(f, up, dn, ones_mask, cap)
            fracs = pick
            ones_mask, fracs = _absorb_integral(ones_mask, fracs)

    for u in sorted(fracs):
        moves += 1
        lift = dict(fracs)
        lift[u] = 1.0
        drop = dict(fracs)
        drop[u] = 0.0
        fracs = _better_endpoint(f, lift, drop, ones_mask, cap)
        ones_mask, fracs = _absorb_integral(ones_mask, fracs)

    result = ones_mask
    M_check = M_real
    if not M_check.is_independent(result):
        raise ContractViolation("pipage produced a dependent set")
    rounded = f.value(result)
    if rounded < target - tolerance:
        raise ContractViolation(
            f"pipage lost value: f(S)={rounded!r} < F(y)={target!r}")
    return result, PipageInfo(target, rounded, moves)


def _endpoint(fracs, u, v, t, raise_u):
    out = dict(fracs)
    xu, xv = fracs[u], fracs[v]
    if raise_u:
        out[u] = 1.0 if t >= 1.0 - xu else xu + t
        out[v] = 0.0 if t >= xv else xv - t
    else:
        out[u] = 0.0 if t >= xu else xu - t
        out[v] = 1.0 if t >= 1.0 - xv else xv + t
    return out


def _better_endpoint(f, cand_a, cand_b, ones_mask, cap):
    va = _pipage_value(f, {u: p for u, p in cand_a.items() if 0 < p < 1},
                       ones_mask | _ones_of(cand_a), cap)
    vb = _pipage_value(f, {u: p for u, p in cand_b.items() if 0 < p < 1},
                       ones_mask | _ones_of(cand_b), cap)
    return cand_a if va >= vb else cand_b


def _ones_of(fracs):
    m = 0
    for u, p in fracs.items():
        if p == 1.0:
            m |= bit(u)
    return m


def _absorb_integral(ones_mask, fracs):
    out = {}
    for u, p in fracs.items():
        if p == 1.0:
            ones_mask |= bit(u)
        elif p > 0.0:
            out[u] = p
    return ones_mask, out


def _pick_pipage_pair(frac_ids, slack, tol):
    """Two fractional elements inside the smallest tight set, if any.

    Tight sets are closed under intersection, so inside a minimal tight
    set holding two fractional elements no smaller tight set can separate
    them, which keeps both probe directions open.
    """
    tight = np.flatnonzero(slack <= tol)
    best = None
    for m in tight:
        m = int(m)
        members = [u for u in frac_ids if m >> u & 1]
        if len(members) >= 2:
            key = (popcount(m), m)
            if best is None or key < best[0]:
                best = (key, members[0], members[1])
    if best is not None:
        return best[1], best[2]
    return frac_ids[0], frac_ids[1]


@dataclass
class MatroidResult:
    final_set: int
    final_value: float
    reference: int
    reference_value: float
    pipage_set: int
    pipage_value: float
    fractional_value: float
    y: UnionDistribution
    trace: GreedyTrace
    ls_info: LocalSearchInfo
    pipage_info: PipageInfo
    config: AlgoConfig
    queries: dict = field(default_factory=dict)


def solve_matroid(M_real, f_real, epsilon=0.5, switch_time=DEFAULT_SWITCH_TIME,
                  frac_cap=None, tolerance=1e-9):
    """Full deterministic pipeline on the dummy-augmented problem."""
    config = make_config(epsilon, switch_time, frac_cap, tolerance)
    r = M_real.rank
    f = augment_with_dummies(f_real, r)
    M = AugmentedMatroid(M_real, r)
    v0, i0 = f.counter.count, M.counter.count
    Z, ls_info = local_search(M, f, config)
    greedy_v0, greedy_i0 = f.counter.count, M.counter.count
    greedy_e0 = f.counter.evaluations
    y, trace = continuous_greedy(M, f, Z, config)
    greedy_queries = {"value": f.counter.count - greedy_v0,
                      "independence": M.counter.count - greedy_i0,
                      "evaluations": f.counter.evaluations - greedy_e0}
    S_pipage, pip_info = pipage_round(M, f, y, tolerance)
    z_real = Z & M.ground.real_mask
    z_value = f.value(Z)
    if pip_info.rounded_value >= z_value:
        final, final_value = S_pipage, pip_info.rounded_value
    else:
        final, final_value = z_real, z_value
    queries = {"value": f.counter.count - v0,
               "independence": M.counter.count - i0,
               "greedy_value": greedy_queries["value"],
               "greedy_independence": greedy_queries["independence"],
               "greedy_evaluations": greedy_queries["evaluations"]}
    return MatroidResult(
        final_set=final, final_value=final_value, reference=Z,
        reference_value=z_value, pipage_set=S_pipage,
        pipage_value=pip_info.rounded_value,
        fractional_value=pip_info.fractional_value, y=y, trace=trace,
        ls_info=ls_info, pipage_info=pip_info, config=config,
        queries=queries)
