"""Command-line front end: gen, solve, verify, suite.

Exit codes: 0 success, 2 usage or malformed input, 3 fractional-support
budget exceeded, 4 internal contract violation, 5 verification failure
(including instance digest mismatch).

All randomness lives in instance generation under explicit seeds; solving
and verification are fully deterministic, so repeated runs produce
byte-identical reports and CSVs.  SUBMAX_THREADS caps the suite's
instance-level parallelism (default: all cores); the merge order is fixed,
so the thread count never changes any output byte.
"""

import argparse
import concurrent.futures
import json
import os
import sys
import time

from . import verify
from .errors import (BudgetError, ContractViolation, InstanceError,
                     ConfigError, SubmaxError)
from .instances import generate_instance, parse_instance
from .knapsack_solver import KnapsackInstance, solve_knapsack
from .matroid_solver import DEFAULT_SWITCH_TIME, solve_matroid
from .reports import (canonical_json, instance_digest, knapsack_report,
                      matroid_report)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BUDGET = 3
EXIT_CONTRACT = 4
EXIT_VERIFY = 5

SUITE_FAMILIES_MATROID = [
    "coverage-uniform", "cut-uniform", "table-uniform",
    "coverage-partition", "cut-partition", "table-partition",
    "coverage-graphic", "cut-graphic", "table-graphic",
]
SUITE_FAMILIES_KNAPSACK = ["coverage-knapsack", "cut-knapsack",
                           "table-knapsack"]


def _solve_instance(obj, epsilon, switch_time, enum_cap, frac_cap):
    f, constraint = parse_instance(obj)
    if isinstance(constraint, KnapsackInstance):
        result = solve_knapsack(f, constraint, epsilon=epsilon,
                                enum_cap=enum_cap, frac_cap=frac_cap)
        opt = verify.brute_force_opt(f, constraint)
        rows = _knapsack_checks(f, constraint, result)
        return knapsack_report(obj, result, opt, rows)
    result = solve_matroid(constraint, f, epsilon=epsilon,
                           switch_time=switch_time, frac_cap=frac_cap)
    opt = verify.brute_force_opt(f, constraint)
    rows = _matroid_checks(f, constraint, result, opt)
    return matroid_report(obj, result, opt, rows)


def _matroid_checks(f_real, M_real, result, opt):
    from .matroid import AugmentedMatroid
    from .setfn import augment_with_dummies
    r = M_real.rank
    f = augment_with_dummies(f_real, r)
    M = AugmentedMatroid(M_real, r)
    rows = []
    rows += verify.check_trace(f, M, opt, result.trace)
    rows += verify.check_stationarity(result.reference, M, f,
                                      result.config.epsilon, opt)
    rows += verify.check_polytope(M, result.y)
    rows += verify.check_pipage_contract(f, M_real, result.pipage_set,
                                         result.fractional_value)
    return rows


def _knapsack_checks(f, instance, result):
    rows = []
    for o in result.outcomes:
        it = o.prefix
        rows.append({"check": "mass_budget", "iteration": it,
                     "lhs": o.mass_slack, "rhs": 0.0, "slack": o.mass_slack,
                     "pass": bool(o.mass_slack >= 0.0)})
        rows.append({"check": "overshoot", "iteration": it,
                     "lhs": o.overshoot_margin, "rhs": 0.0,
                     "slack": o.overshoot_margin,
                     "pass": bool(o.overshoot_margin >= 0.0)})
        rows.append({"check": "mass_conserved", "iteration": it,
                     "lhs": 1e-9, "rhs": o.max_mass_delta,
                     "slack": 1e-9 - o.max_mass_delta,
                     "pass": bool(o.max_mass_delta <= 1e-9)})
        rows.append({"check": "convexity", "iteration": it,
                     "lhs": o.min_convexity_slack, "rhs": -1e-9,
                     "slack": o.min_convexity_slack + 1e-9,
                     "pass": bool(o.min_convexity_slack >= -1e-9)})
        rows.append({"check": "frac_growth", "iteration": it,
                     "lhs": 2, "rhs": o.frac_growth,
                     "slack": 2 - o.frac_growth,
                     "pass": bool(o.frac_growth <= 2)})
        w = sum(instance.weights[u] for u in _bits(o.candidate))
        rows.append({"check": "feasible", "iteration": it,
                     "lhs": instance.budget, "rhs": w,
                     "slack": instance.budget - w,
                     "pass": bool(w <= instance.budget)})
    return rows


def _bits(mask):
    out = []
    u = 0
    while mask:
        if mask & 1:
            out.append(u)
        mask >>= 1
        u += 1
    return out


def cmd_gen(args):
    obj = generate_instance(args.kind, args.n, args.seed)
    payload = canonical_json(obj) + "\n"
    with open(args.out, "w") as fh:
        fh.write(payload)
    return EXIT_OK


def cmd_solve(args):
    with open(args.instance) as fh:
        obj = json.load(fh)
    t0 = time.monotonic()
    report = _solve_instance(obj, args.epsilon, args.ts, args.enum_cap,
                             args.frac_cap)
    elapsed = time.monotonic() - t0
    payload = canonical_json(report) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)
    print(f"solved in {elapsed:.3f}s "
          f"(value={report['final']['value']})", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args):
    with open(args.instance) as fh:
        obj = json.load(fh)
    with open(args.report) as fh:
        report = json.load(fh)
    if report.get("instance_digest") != instance_digest(obj):
        print("digest mismatch between instance and report", file=sys.stderr)
        return EXIT_VERIFY
    cfg = report["config"]
    fresh = _solve_instance(obj, cfg["requested_epsilon"],
                            cfg["requested_switch_time"],
                            cfg.get("enum_cap", args.enum_cap),
                            cfg.get("frac_cap"))
    summary = {
        "reproducible": canonical_json(fresh) == canonical_json(report),
        "checks": fresh.get("checks", {}),
    }
    sys.stdout.write(canonical_json(summary) + "\n")
    if not summary["reproducible"]:
        return EXIT_VERIFY
    if summary["checks"].get("violations", 0):
        return EXIT_VERIFY
    return EXIT_OK


def _suite_jobs(seed, count):
    jobs = []
    for i in range(count):
        family = SUITE_FAMILIES_MATROID[i % len(SUITE_FAMILIES_MATROID)]
        jobs.append(("matroid", family, 6 + 2 * ((i // 3) % 3), seed + i, 0))
    for i in range(count):
        family = SUITE_FAMILIES_KNAPSACK[i % len(SUITE_FAMILIES_KNAPSACK)]
        jobs.append(("knapsack", family, 6 + 2 * ((i // 3) % 3), seed + i,
                     i % 3))
    return jobs


def _run_suite_job(job):
    kind, family, n, seed, enum_cap = job
    obj = generate_instance(family, n, seed)
    report = _solve_instance(obj, 0.5, DEFAULT_SWITCH_TIME, enum_cap, None)
    return job, obj, report


def cmd_suite(args):
    jobs = _suite_jobs(args.seed, args.count)
    threads = int(os.environ.get("SUBMAX_THREADS") or os.cpu_count() or 1)
    os.makedirs(args.out_dir, exist_ok=True)
    results = []
    with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(_run_suite_job, jobs))
    lines = ["family,n,epsilon,ratio,queries_value,queries_indep,violations"]
    for (kind, family, n, seed, enum_cap), obj, report in results:
        name = f"{kind}_{family}_n{n}_s{seed}.json"
        with open(os.path.join(args.out_dir, name), "w") as fh:
            fh.write(canonical_json(report) + "\n")
        ratio = report["oracle"]["ratio"]
        q = report.get("queries", {})
        lines.append(",".join([
            family, repr(n), repr(0.5), repr(ratio),
            repr(q.get("value", 0)), repr(q.get("independence", 0)),
            repr(report["checks"]["violations"]),
        ]))
    csv_payload = "\n".join(lines) + "\n"
    with open(os.path.join(args.out_dir, "suite.csv"), "w") as fh:
        fh.write(csv_payload)
    bad = sum(r["checks"]["violations"] for _, _, r in results)
    print(f"suite: {len(results)} runs, {bad} violations", file=sys.stderr)
    return EXIT_VERIFY if bad else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="submax")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a seeded instance")
    g.add_argument("--kind", required=True,
                   help="<function>-<constraint>, e.g. cut-uniform")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve an instance file")
    s.add_argument("--instance", required=True)
    s.add_argument("--epsilon", type=float, default=0.5)
    s.add_argument("--ts", type=float, default=DEFAULT_SWITCH_TIME)
    s.add_argument("--enum-cap", type=int, default=2)
    s.add_argument("--frac-cap", type=int, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="re-check a report against its instance")
    v.add_argument("--instance", required=True)
    v.add_argument("--report", required=True)
    v.add_argument("--enum-cap", type=int, default=2)
    v.set_defaults(func=cmd_verify)

    u = sub.add_parser("suite", help="generate, solve and verify a seeded suite")
    u.add_argument("--seed", type=int, default=0)
    u.add_argument("--count", type=int, default=9)
    u.add_argument("--out-dir", required=True)
    u.set_defaults(func=cmd_suite)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ContractViolation as exc:
        print(f"contract violation: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (InstanceError, ConfigError, SubmaxError, OSError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
