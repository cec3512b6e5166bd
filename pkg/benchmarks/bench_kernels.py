"""Time the compiled kernels against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per (kernel, problem size) with the median time per call for
each available backend and the speedup.
"""
import argparse
import statistics
import time

import numpy as np

from sprox import kernels
from sprox.datagen import chain_groups
from sprox.model import FusionGraph, validate_problem
from sprox.oracle import reference_solve
from sprox.penalty import build_fusion_map, build_group_map


def timed(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def cases(rng):
    for G in (10, 50):
        cmap = build_group_map(chain_groups(G, 100, 10), 1.0)
        yield f"group |G|={G} J={cmap.dim}", cmap, rng.standard_normal((1, cmap.dim))
    K = 200
    pairs = rng.choice(K * (K - 1) // 2, size=5 * K, replace=False)
    iu = np.triu_indices(K, 1)
    edges = tuple(sorted((int(iu[0][p]), int(iu[1][p]), float(rng.uniform(0.2, 1))) for p in pairs))
    cmap = build_fusion_map(FusionGraph(K, edges), 1.0)
    yield f"fusion K={K} |E|={len(edges)} J=100", cmap, rng.standard_normal((100, K))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    names = sorted(kernels.available_backends())
    print(f"backends: {', '.join(names)}")
    for label, cmap, V in cases(rng):
        res = {}
        for name in names:
            kernels.use_backend(name)
            res[name] = timed(lambda: kernels.penalty_eval(
                cmap.row_idx, cmap.col_idx, cmap.values, cmap.rows, cmap.dim,
                cmap.block_ptr, V, 1e-4, True, False), args.repeat)
        report("penalty_eval", label, res)
        v = V.reshape(-1) * 3
        res = {}
        for name in names:
            kernels.use_backend(name)
            res[name] = timed(lambda: kernels.soft_threshold(v, 0.5), args.repeat)
        report("soft_threshold", label, res)

    X = rng.standard_normal((50, 30))
    problem = validate_problem(X, X @ rng.standard_normal(30) + rng.standard_normal(50))
    cmap = build_group_map(chain_groups(3, 12, 3), 1.0)
    res = {}
    for name in names:
        kernels.use_backend(name)
        res[name] = timed(lambda: reference_solve(problem, cmap, 0.5), 1)
    report("reference_solve", "J=30 N=50", res)


def report(kernel, label, res):
    parts = [f"{n} {t * 1e6:10.1f} us" for n, t in res.items()]
    line = f"{kernel:16s} {label:32s} " + "  ".join(parts)
    if len(res) == 2:
        line += f"  speedup x{res['python'] / res['cython']:.1f}"
    print(line)


if __name__ == "__main__":
    main()
