"""Compare the compiled and pure-Python evaluation kernels.

Times the hot operation (weighted join sums over a realization table) on
synthetic workloads shaped like real solver inner loops, then times one
full matroid solve per backend.  Run:

    python benchmarks/bench_kernel.py
"""

import random
import time

import numpy as np

from submax import _kernel_py
from submax.extension import UnionDistribution
from submax.instances import generate_instance, parse_instance
from submax.matroid_solver import solve_matroid

try:
    from submax import _kernel as _kernel_c
except ImportError:
    _kernel_c = None


def _workload(rng, n, frac):
    from submax.setfn import make_coverage, make_cut, make_table
    oracles = {
        "coverage": make_coverage([rng.randint(1, 9) for _ in range(n + 2)],
                                  [sorted(rng.sample(range(n + 2), 2))
                                   for _ in range(n)]),
        "cut": make_cut(n, [(a, b, rng.randint(1, 9))
                            for a in range(n) for b in range(a + 1, n)
                            if rng.random() < 0.5]),
        "table": make_table([float(rng.randint(0, 50))
                             for _ in range(1 << n)]),
    }
    coords = {}
    while len(coords) < frac:
        coords[rng.randint(1, (1 << n) - 1)] = rng.choice([0.125, 0.25, 0.5])
    y = UnionDistribution(coords, cap=frac)
    masks, weights = y.realization_table()
    unions = [rng.randint(0, (1 << n) - 1) for _ in range(24)]
    return oracles, masks, weights, unions


def _time(fn, repeats=7):
    samples = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return min(samples)


def bench_kernels():
    rng = random.Random(0)
    print(f"{'family':<10} {'frac':>4} {'python':>10} {'compiled':>10} "
          f"{'speedup':>8}")
    for frac in (8, 12, 14):
        oracles, masks, weights, unions = _workload(rng, 10, frac)
        for name, f in oracles.items():
            plan = f.kernel_plan()
            t_py = _time(lambda: _kernel_py.weighted_join_sums(
                plan, masks, weights, unions))
            if _kernel_c is None:
                print(f"{name:<10} {frac:>4} {t_py * 1e3:>9.2f}ms"
                      f" {'-':>10} {'-':>8}")
                continue
            t_c = _time(lambda: _kernel_c.weighted_join_sums(
                plan, masks, weights, unions))
            a = _kernel_py.weighted_join_sums(plan, masks, weights, unions)
            b = _kernel_c.weighted_join_sums(plan, masks, weights, unions)
            assert np.array_equal(a, b), "kernels disagree"
            print(f"{name:<10} {frac:>4} {t_py * 1e3:>9.2f}ms"
                  f" {t_c * 1e3:>9.2f}ms {t_py / t_c:>7.1f}x")


def bench_solve():
    import os
    obj = generate_instance("cut-uniform", 9, 1)
    for backend in ("python", "c") if _kernel_c is not None else ("python",):
        os.environ["SUBMAX_KERNEL"] = backend
        import importlib
        import submax.kernel
        importlib.reload(submax.kernel)
        f, M = parse_instance(obj)
        t0 = time.perf_counter()
        res = solve_matroid(M, f)
        dt = time.perf_counter() - t0
        print(f"solve_matroid n=9 backend={backend:<7} {dt:.3f}s "
              f"value={res.final_value}")


if __name__ == "__main__":
    bench_kernels()
    print()
    bench_solve()
