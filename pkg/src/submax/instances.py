"""Instance JSON schema, parsing, and seeded deterministic generators.

Schema::

    {"n": int,
     "function":
         {"kind": "coverage", "weights": [...], "covers": [[item, ...], ...]}
       | {"kind": "cut", "edges": [[a, b, w], ...]}
       | {"kind": "table", "values": [... 2**n reals ...]},
     "constraint":
         {"kind": "uniform", "k": int}
       | {"kind": "partition", "parts": [{"members": [...], "capacity": k}, ...]}
       | {"kind": "graphic", "edges": [[u, v], ...]}      # element i = edge i
       | {"kind": "knapsack", "weights": [...], "budget": B}}

Unknown kinds are rejected.  Generators draw from ``random.Random(seed)``
only, so identical seeds give byte-identical instances.  Generated
objectives are integer-weighted, which keeps solver arithmetic exact at
the default epsilon grid.
"""

import random

from .errors import InstanceError
from .ground import mask_of
from .knapsack_solver import KnapsackInstance
from .matroid import make_graphic, make_partition, make_uniform
from .setfn import make_coverage, make_cut, make_table

GEN_N_CAP = 14

FUNCTION_KINDS = ("coverage", "cut", "table")
CONSTRAINT_KINDS = ("uniform", "partition", "graphic", "knapsack")


def build_function(n, payload):
    kind = payload.get("kind")
    if kind == "coverage":
        covers = payload["covers"]
        if len(covers) != n:
            raise InstanceError("covers length must equal n")
        return make_coverage(payload["weights"], covers)
    if kind == "cut":
        return make_cut(n, [tuple(e) for e in payload["edges"]])
    if kind == "table":
        values = payload["values"]
        if len(values) != (1 << n):
            raise InstanceError("table length must be 2**n")
        return make_table(values)
    raise InstanceError(f"unknown function kind {kind!r}")


def build_constraint(n, payload):
    kind = payload.get("kind")
    if kind == "uniform":
        return make_uniform(n, payload["k"])
    if kind == "partition":
        parts = [(mask_of(p["members"]), p["capacity"]) for p in payload["parts"]]
        return make_partition(n, parts)
    if kind == "graphic":
        edges = [tuple(e) for e in payload["edges"]]
        if len(edges) != n:
            raise InstanceError("graphic constraint needs one edge per element")
        n_vertices = max((max(a, b) for a, b in edges), default=0) + 1
        return make_graphic(n_vertices, edges)
    if kind == "knapsack":
        weights = payload["weights"]
        if len(weights) != n:
            raise InstanceError("knapsack weights length must equal n")
        return KnapsackInstance(tuple(float(w) for w in weights),
                                float(payload["budget"]))
    raise InstanceError(f"unknown constraint kind {kind!r}")


def parse_instance(obj):
    """-> (oracle, constraint).  Rejects unknown kinds and bad payloads."""
    try:
        n = int(obj["n"])
        f = build_function(n, obj["function"])
        constraint = build_constraint(n, obj["constraint"])
    except KeyError as exc:
        raise InstanceError(f"missing instance field {exc}") from exc
    if f.ground.n_real != n:
        raise InstanceError("function arity disagrees with n")
    return f, constraint


def _gen_function(rng, fkind, n):
    if fkind == "coverage":
        n_universe = n + 2
        weights = [rng.randint(1, 9) for _ in range(n_universe)]
        covers = [sorted(rng.sample(range(n_universe), rng.randint(1, 3)))
                  for _ in range(n)]
        return {"kind": "coverage", "weights": weights, "covers": covers}
    if fkind == "cut":
        edges = []
        for a in range(n):
            for b in range(a + 1, n):
                if rng.random() < 0.45:
                    edges.append([a, b, rng.randint(1, 9)])
        if not edges:
            edges.append([0, 1 % n if n > 1 else 0, 1])
        return {"kind": "cut", "edges": edges}
    if fkind == "table":
        # tabulate a random coverage objective: submodular by construction
        inner = _gen_function(rng, "coverage", n)
        f = build_function(n, inner)
        values = [float(f.peek(m)) for m in range(1 << n)]
        return {"kind": "table", "values": values}
    raise InstanceError(f"unknown function kind {fkind!r}")


def _gen_constraint(rng, ckind, n):
    if ckind == "uniform":
        return {"kind": "uniform", "k": rng.randint(1, min(3, n))}
    if ckind == "partition":
        n_parts = rng.randint(2, 3)
        members = [[] for _ in range(n_parts)]
        for u in range(n):
            members[rng.randrange(n_parts)].append(u)
        parts = [{"members": mem, "capacity": 1}
                 for mem in members if mem]
        return {"kind": "partition", "parts": parts}
    if ckind == "graphic":
        n_vertices = 4  # rank at most 3
        edges = []
        for _ in range(n):
            a = rng.randrange(n_vertices)
            b = rng.randrange(n_vertices)
            while b == a:
                b = rng.randrange(n_vertices)
            edges.append(sorted([a, b]))
        return {"kind": "graphic", "edges": edges}
    if ckind == "knapsack":
        weights = [rng.randint(1, 9) for _ in range(n)]
        lo = min(weights)
        budget = max(lo, sum(weights) // 3)
        return {"kind": "knapsack", "weights": weights, "budget": budget}
    raise InstanceError(f"unknown constraint kind {ckind!r}")


def generate_instance(kind, n, seed):
    """``kind`` is "<function>-<constraint>", e.g. "cut-uniform"."""
    try:
        fkind, ckind = kind.split("-")
    except ValueError:
        raise InstanceError(
            f"kind must look like 'coverage-uniform', got {kind!r}") from None
    if fkind not in FUNCTION_KINDS or ckind not in CONSTRAINT_KINDS:
        raise InstanceError(f"unknown kind {kind!r}")
    if not 2 <= n <= GEN_N_CAP:
        raise InstanceError(f"generator supports 2 <= n <= {GEN_N_CAP}")
    rng = random.Random((seed, kind, n).__repr__())
    return {
        "n": n,
        "family": kind,
        "seed": seed,
        "function": _gen_function(rng, fkind, n),
        "constraint": _gen_constraint(rng, ckind, n),
    }
