"""Deterministic knapsack pipeline: enumeration, density greedy, rounding.

The driver enumerates every prefix set E up to a small cardinality cap,
pretends E is already taken (objective translated by E), removes elements
too heavy for the remaining room, and optimizes over the lightweight rest
with a reserved slice of the budget:

* ``knapsack_split`` greedily fills ``ell`` disjoint parts, always adding
  the feasible (element, part) pair of largest marginal density
  gain/weight, ties broken lexicographically; it stops when nothing fits.
* ``knapsack_dmcg`` runs 1/delta measured-greedy steps, each adding
  probability delta on every split part; the weighted marginal mass grows
  by at most delta times the budget per step, so the final fractional
  point respects the budget.
* ``knapsack_round`` folds elements to singleton coordinates one by one
  (value never decreases) and, whenever two fractional singletons exist,
  moves along the weighted exchange direction e_u/w(u) - e_v/w(v) to the
  better endpoint.  The relaxed objective is convex along that direction,
  so endpoint moves never lose value, and the weighted marginal mass is
  invariant along the move.  At most one element stays fractional; the
  final answer is the better of the all-ones set with and without it.

Budget accounting: the optimizer runs on (1-eps)(B - w(E)) while the
rounding's weight cap is eps * (B - w(E)) per element, so even with the
single-element overshoot the returned set fits in B - w(E) and the overall
answer fits in B.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractViolation, InstanceError
from .extension import (UnionDistribution, expected_value, marginals,
                        prob_sum, relax, step_vector, substitute,
                        union_evaluator)
from .ground import bit, iter_bits, ids_of, popcount
from .matroid_solver import AlgoConfig, make_config
from .setfn import restrict_translate


@dataclass(frozen=True)
class KnapsackInstance:
    weights: tuple
    budget: float

    def __post_init__(self):
        if self.budget < 0:
            raise InstanceError(f"budget {self.budget} is negative")
        if self.budget <= 0:
            raise InstanceError("budget must be positive")
        if any(w <= 0 for w in self.weights):
            raise InstanceError("all weights must be positive")

    @property
    def n(self):
        return len(self.weights)

    def weight_of(self, mask):
        return float(sum(self.weights[u] for u in iter_bits(mask)))


def knapsack_split(g, weights, budget, ell, ground_mask):
    """Disjoint parts by max marginal density; stops when nothing fits.

    Returns (parts, pick_log); the log records each selection's density
    for the monotonicity diagnostics.
    """
    parts = [0] * ell
    union = 0
    used = 0.0
    g0 = g.value(0)
    cache = [g0] * ell
    picks = []
    while True:
        cands = [u for u in iter_bits(ground_mask & ~union)
                 if used + weights[u] <= budget]
        if not cands:
            break
        best = None  # (density, j, u, value)
        for j in range(ell):
            vals = g.value_many([parts[j] | bit(u) for u in cands])
            for u, v in zip(cands, vals):
                density = (float(v) - cache[j]) / weights[u]
                if best is None or density > best[0]:
                    best = (density, j, u, float(v))
        density, j, u, val = best
        parts[j] |= bit(u)
        union |= bit(u)
        used += weights[u]
        cache[j] = val
        picks.append({"element": u, "part": j, "density": density})
    return parts, picks


@dataclass
class DmcgRow:
    i: int
    parts: list
    y: UnionDistribution
    value: float
    frac: int
    weighted_mass: float
    picks: list


def knapsack_dmcg(g, weights, budget, config, ground_mask):
    """Measured continuous greedy; weighted marginal mass stays within budget."""
    n = len(weights)
    y = UnionDistribution.zero(cap=config.frac_cap)
    rows = []
    for i in range(1, config.steps + 1):
        ev = union_evaluator(g, y)
        parts, picks = knapsack_split(ev, weights, budget, config.ell,
                                      ground_mask)
        y = prob_sum(y, step_vector(parts, config.delta, config.frac_cap))
        mar = marginals(y, n)
        mass = float(np.dot(mar, np.asarray(weights, dtype=np.float64)))
        rows.append(DmcgRow(
            i=i, parts=list(parts), y=y, value=expected_value(g, y),
            frac=y.frac, weighted_mass=mass, picks=picks))
    return y, rows


@dataclass
class ExchangeRecord:
    raise_id: int
    lower_id: int
    t_min: float
    t_max: float
    value_min: float
    value_max: float
    value_mid: float
    chosen: float
    mass_delta: float
    frac_after: int


@dataclass
class RoundingInfo:
    initial_frac: int
    max_frac: int
    exchanges: list = field(default_factory=list)
    relaxed: int = 0
    leftover: int = 0  # mask of the final fractional element, if any
    kept_value: float = 0.0
    fractional_value: float = 0.0


def _singleton_prob(y, u):
    return y.coordinate(bit(u))


def _weighted_mass(y, weights, n):
    return float(np.dot(marginals(y, n), np.asarray(weights, dtype=np.float64)))


def knapsack_round(g, weights, y, epsilon, round_budget, ground_mask,
                   tolerance=1e-9):
    """Round a budget-respecting fractional point to a near-feasible set.

    Preconditions: weighted marginal mass of y at most round_budget and
    every usable element weighing at most epsilon * round_budget.  Returns
    a set S with value(S) >= relaxed value - tolerance and
    w(S) <= (1 + epsilon) * round_budget.
    """
    n = len(weights)
    mass0 = _weighted_mass(y, weights, n)
    if mass0 > round_budget + tolerance:
        raise ContractViolation(
            f"weighted marginal mass {mass0!r} exceeds budget {round_budget!r}")
    for u in iter_bits(ground_mask):
        if weights[u] > epsilon * round_budget + tolerance:
            raise ContractViolation(
                f"element {u} weighs {weights[u]} > eps * budget")

    target = expected_value(g, y)
    info = RoundingInfo(initial_frac=y.frac, max_frac=y.frac,
                        fractional_value=target)
    y_cur = y
    pending = ids_of(ground_mask)
    taken = 0

    def fractional_singles():
        out = []
        for m, p in y_cur.coords:
            if popcount(m) == 1:
                u = m.bit_length() - 1
                if taken >> u & 1:
                    out.append(u)
        return sorted(out)

    singles = []
    while True:
        while len(singles) < 2 and pending:
            u = pending.pop(0)
            y_cur = relax(y_cur, u)
            taken |= bit(u)
            info.relaxed += 1
            info.max_frac = max(info.max_frac, y_cur.frac)
            singles = fractional_singles()
        if len(singles) < 2:
            break
        u, v = singles[0], singles[1]
        yu, yv = _singleton_prob(y_cur, u), _singleton_prob(y_cur, v)
        wu, wv = weights[u], weights[v]
        t_max = min((1.0 - yu) * wu, yv * wv)
        t_min = max(-yu * wu, (yv - 1.0) * wv)
        cand_max = _exchange_endpoint(y_cur, u, v, yu, yv, wu, wv, t_max)
        cand_min = _exchange_endpoint(y_cur, u, v, yu, yv, wu, wv, t_min)
        val_max = expected_value(g, cand_max)
        val_min = expected_value(g, cand_min)
        t_mid = 0.5 * (t_min + t_max)
        y_mid = substitute(substitute(y_cur, bit(u), yu + t_mid / wu),
                           bit(v), yv - t_mid / wv)
        val_mid = expected_value(g, y_mid, counted=False)
        mass_before = _weighted_mass(y_cur, weights, n)
        y_cur = cand_max if val_max >= val_min else cand_min
        chosen = val_max if val_max >= val_min else val_min
        info.exchanges.append(ExchangeRecord(
            raise_id=u, lower_id=v, t_min=t_min, t_max=t_max,
            value_min=val_min, value_max=val_max, value_mid=val_mid,
            chosen=chosen,
            mass_delta=_weighted_mass(y_cur, weights, n) - mass_before,
            frac_after=y_cur.frac))
        info.max_frac = max(info.max_frac, y_cur.frac)
        singles = fractional_singles()

    ones = y_cur.sure & ground_mask
    leftover = 0
    if singles:
        leftover = bit(singles[0])
    info.leftover = leftover
    v_bare = g.value(ones)
    if leftover:
        v_with = g.value(ones | leftover)
        if v_with > v_bare:
            result, info.kept_value = ones | leftover, v_with
        else:
            result, info.kept_value = ones, v_bare
    else:
        result, info.kept_value = ones, v_bare

    w_result = float(sum(weights[u] for u in iter_bits(result)))
    if w_result > (1.0 + epsilon) * round_budget + tolerance:
        raise ContractViolation(
            f"rounded set weighs {w_result} > (1+eps) * {round_budget}")
    if info.kept_value < target - tolerance:
        raise ContractViolation(
            f"rounding lost value: {info.kept_value!r} < {target!r}")
    return result, info


def _exchange_endpoint(y, u, v, yu, yv, wu, wv, t):
    """Apply the exchange at parameter t, landing binding coords exactly."""
    up_bind = (1.0 - yu) * wu
    dn_bind = yv * wv
    if t >= 0:
        pu = 1.0 if t >= up_bind else yu + t / wu
        pv = 0.0 if t >= dn_bind else yv - t / wv
    else:
        pu = 0.0 if t <= -yu * wu else yu + t / wu
        pv = 1.0 if t <= (yv - 1.0) * wv else yv - t / wv
    return substitute(substitute(y, bit(u), pu), bit(v), pv)


@dataclass
class EnumerationOutcome:
    prefix: int
    candidate: int
    value: float
    residual_budget: float
    dmcg_budget: float
    filtered_out: int
    mass_slack: float
    max_mass_delta: float
    min_convexity_slack: float
    frac_growth: int
    overshoot_margin: float
    density_monotone_slack: float


@dataclass
class KnapsackResult:
    final_set: int
    final_value: float
    prefix: int
    config: AlgoConfig
    outcomes: list
    winning_rows: list
    winning_rounding: RoundingInfo
    winning_y: UnionDistribution
    enum_cap: int = 2
    queries: dict = field(default_factory=dict)


def solve_knapsack(f, instance, epsilon=0.5, enum_cap=2, frac_cap=None,
                   tolerance=1e-9):
    """Enumerate prefixes, optimize the light remainder, round, take the best.

    Ties between prefixes break on the value rounded to 1e-12, then the
    smaller prefix bitmask.
    """
    if instance.budget < 0:
        raise InstanceError("negative budget")
    if enum_cap < 0:
        raise ConfigError("enum_cap must be non-negative")
    config = make_config(epsilon, switch_time=0.0, frac_cap=frac_cap,
                         tolerance=tolerance)
    eps = config.epsilon
    n = f.ground.n_real
    weights = [float(w) for w in instance.weights]
    budget = float(instance.budget)

    v0 = f.counter.count
    best = None  # (rounded value, prefix mask) ordering key
    best_payload = None
    outcomes = []
    for prefix in _enumerate_prefixes(n, weights, budget, enum_cap):
        w_prefix = sum(weights[u] for u in iter_bits(prefix))
        room = budget - w_prefix
        filter_mask = 0
        filtered_out = 0
        for u in range(n):
            if prefix >> u & 1:
                continue
            if weights[u] <= eps * room:
                filter_mask |= bit(u)
            else:
                filtered_out += 1
        dmcg_budget = (1.0 - eps) * room
        g = restrict_translate(f, prefix)
        y, rows = knapsack_dmcg(g, weights, dmcg_budget, config, filter_mask)
        mass = _weighted_mass(y, weights, n)
        if mass > dmcg_budget + tolerance:
            raise ContractViolation("optimizer exceeded its budget")
        s_res, round_info = knapsack_round(
            g, weights, y, eps, round_budget=room, ground_mask=filter_mask,
            tolerance=tolerance)
        candidate = prefix | s_res
        value = f.value(candidate)
        w_cand = sum(weights[u] for u in iter_bits(candidate))
        if w_cand > budget + tolerance:
            raise ContractViolation("candidate exceeds the budget")

        outcomes.append(EnumerationOutcome(
            prefix=prefix, candidate=candidate, value=value,
            residual_budget=room, dmcg_budget=dmcg_budget,
            filtered_out=filtered_out, mass_slack=dmcg_budget - mass,
            max_mass_delta=max((abs(e.mass_delta) for e in round_info.exchanges),
                               default=0.0),
            min_convexity_slack=min(
                (max(e.value_min, e.value_max) - e.value_mid
                 for e in round_info.exchanges), default=0.0),
            frac_growth=round_info.max_frac - round_info.initial_frac,
            overshoot_margin=(1.0 + eps) * room - sum(
                weights[u] for u in iter_bits(s_res)),
            density_monotone_slack=_density_slack(rows)))
        key = (round(value, 12), -prefix)
        if best is None or key > best:
            best = key
            best_payload = (candidate, value, prefix, rows, round_info, y)

    candidate, value, prefix, rows, round_info, y = best_payload
    return KnapsackResult(
        final_set=candidate, final_value=value, prefix=prefix, config=config,
        outcomes=outcomes, winning_rows=rows, winning_rounding=round_info,
        winning_y=y, enum_cap=enum_cap,
        queries={"value": f.counter.count - v0, "independence": 0})


def _enumerate_prefixes(n, weights, budget, enum_cap):
    out = []
    for k in range(min(enum_cap, n) + 1):
        for combo in itertools.combinations(range(n), k):
            if sum(weights[u] for u in combo) <= budget:
                out.append(sum(1 << u for u in combo))
    out.sort()
    return out


def _density_slack(rows):
    """Min over parts of (earlier density - later density); >= 0 expected."""
    slack = float("inf")
    for row in rows:
        last = {}
        for pick in row.picks:
            j = pick["part"]
            if j in last:
                slack = min(slack, last[j] - pick["density"])
            last[j] = pick["density"]
    return 0.0 if slack == float("inf") else slack
