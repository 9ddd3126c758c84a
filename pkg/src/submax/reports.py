"""Run reports with canonical serialization.

A report is fully determined by (instance, flags): canonical JSON uses
sorted keys, compact separators, and Python's shortest-roundtrip float
repr, so byte comparison is a valid equality test.  Wall-clock timing is
deliberately excluded from report payloads (it would break byte-level
reproducibility); the CLI prints timing to stderr instead.
"""

import hashlib
import json

from .ground import ids_of
from .verify import violations


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def instance_digest(instance_obj):
    return hashlib.sha256(canonical_json(instance_obj).encode()).hexdigest()


def matroid_report(instance_obj, result, opt=None, check_rows=None):
    trace_rows = []
    for row in result.trace.rows:
        trace_rows.append({
            "i": row.i,
            "avoid": ids_of(row.avoid_mask),
            "parts": [ids_of(p) for p in row.parts],
            "y": row.y.dump(),
            "value": row.value,
            "frac": row.frac,
            "mar_inf": row.mar_inf,
        })
    report = {
        "schema": "submax.report.v1",
        "kind": "matroid",
        "instance_digest": instance_digest(instance_obj),
        "config": result.config.as_dict(),
        "reference": {
            "set": ids_of(result.reference),
            "value": result.reference_value,
            "initializer_set": ids_of(result.ls_info.initializer_set),
            "initializer_value": result.ls_info.initializer_value,
            "threshold": result.ls_info.threshold,
            "iterations": result.ls_info.iterations,
        },
        "trace": trace_rows,
        "final": {
            "set": ids_of(result.final_set),
            "value": result.final_value,
            "pipage_set": ids_of(result.pipage_set),
            "pipage_value": result.pipage_value,
            "fractional_value": result.fractional_value,
        },
        "queries": dict(result.queries) if hasattr(result, "queries") else {},
    }
    if opt is not None:
        ratio = 1.0 if opt.opt_value <= 0 else result.final_value / opt.opt_value
        report["oracle"] = {
            "opt_value": opt.opt_value,
            "opt_set": ids_of(opt.opt_set),
            "feasible_count": opt.feasible_count,
            "ratio": ratio,
        }
    if check_rows is not None:
        report["checks"] = summarize_checks(check_rows)
    return report


def knapsack_report(instance_obj, result, opt=None, check_rows=None):
    outcome_rows = []
    for o in result.outcomes:
        outcome_rows.append({
            "prefix": ids_of(o.prefix),
            "candidate": ids_of(o.candidate),
            "value": o.value,
            "residual_budget": o.residual_budget,
            "dmcg_budget": o.dmcg_budget,
            "filtered_out": o.filtered_out,
            "mass_slack": o.mass_slack,
            "max_mass_delta": o.max_mass_delta,
            "min_convexity_slack": o.min_convexity_slack,
            "frac_growth": o.frac_growth,
            "overshoot_margin": o.overshoot_margin,
            "density_monotone_slack": o.density_monotone_slack,
        })
    win_rows = []
    for row in result.winning_rows:
        win_rows.append({
            "i": row.i,
            "parts": [ids_of(p) for p in row.parts],
            "y": row.y.dump(),
            "value": row.value,
            "frac": row.frac,
            "weighted_mass": row.weighted_mass,
        })
    config = result.config.as_dict()
    config["enum_cap"] = result.enum_cap
    report = {
        "schema": "submax.report.v1",
        "kind": "knapsack",
        "instance_digest": instance_digest(instance_obj),
        "config": config,
        "enumeration": outcome_rows,
        "winning": {
            "prefix": ids_of(result.prefix),
            "trace": win_rows,
            "rounding": {
                "initial_frac": result.winning_rounding.initial_frac,
                "max_frac": result.winning_rounding.max_frac,
                "exchanges": len(result.winning_rounding.exchanges),
                "relaxed": result.winning_rounding.relaxed,
                "leftover": ids_of(result.winning_rounding.leftover),
                "kept_value": result.winning_rounding.kept_value,
                "fractional_value": result.winning_rounding.fractional_value,
            },
        },
        "final": {
            "set": ids_of(result.final_set),
            "value": result.final_value,
        },
        "queries": dict(result.queries) if hasattr(result, "queries") else {},
    }
    if opt is not None:
        ratio = 1.0 if opt.opt_value <= 0 else result.final_value / opt.opt_value
        report["oracle"] = {
            "opt_value": opt.opt_value,
            "opt_set": ids_of(opt.opt_set),
            "feasible_count": opt.feasible_count,
            "ratio": ratio,
        }
    if check_rows is not None:
        report["checks"] = summarize_checks(check_rows)
    return report


def summarize_checks(rows):
    bad = violations(rows)
    return {
        "total": len(rows),
        "violations": len(bad),
        "failing": bad[:20],
    }
