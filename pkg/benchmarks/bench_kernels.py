#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure numpy/Python fallback.

Covers the two hot paths: the Monte Carlo auction loop (greedy allocation +
closed-form VCG revenue) and the adaptive quadrature behind the equilibrium
bid table.  Run from the repository root:

    python benchmarks/bench_kernels.py [--rounds 1000000] [--grid 512]
"""

import argparse
import time

import numpy as np

from posauction import BayesSetting, SlotCurve, Uniform, _pure
from posauction.quadrature import QuadratureConfig

try:
    from posauction import _fast
except ImportError:
    _fast = None


def timeit(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_mc(rounds: int):
    n, k = 4, 2
    rng = np.random.Generator(np.random.Philox(key=[99, 0]))
    values = np.ascontiguousarray(rng.random((rounds, n)))
    bids = np.ascontiguousarray(-np.sort(-rng.random((rounds, n, k)), axis=2))
    betas = np.array([2.0, 1.0])

    rows = []
    for name, mod in (("pure", _pure), ("compiled", _fast)):
        if mod is None:
            continue
        t_greedy = timeit(lambda m=mod: m.greedy_assign_batch(bids))
        t_vcg = timeit(lambda m=mod: m.vcg_truthful_revenue_batch(values, betas))
        rows.append((name, t_greedy, t_vcg))
    print(f"\nMonte Carlo kernels, {rounds:,} rounds, n={n}, k={k}")
    print(f"{'impl':<10} {'greedy_assign':>14} {'vcg_revenue':>14}")
    for name, tg, tv in rows:
        print(f"{name:<10} {tg * 1e3:>11.1f} ms {tv * 1e3:>11.1f} ms")
    if len(rows) == 2:
        print(f"{'speedup':<10} {rows[0][1] / rows[1][1]:>12.1f}x "
              f"{rows[0][2] / rows[1][2]:>12.1f}x")
        a = _pure.greedy_assign_batch(bids[:1000])
        b = _fast.greedy_assign_batch(bids[:1000])
        assert np.array_equal(a, b), "kernel outputs diverge"


def bench_quadrature(grid: int):
    dist = Uniform(1.0)
    cfg = QuadratureConfig()
    setting = BayesSetting(n=4, curve=SlotCurve([2.0, 1.0]), dist=dist)
    from posauction.bayes import bstar_integral

    import posauction.kernels as kernels

    def build(force_pure: bool):
        saved = kernels._fast
        kernels._fast = None if force_pure else _fast
        try:
            t0 = time.perf_counter()
            for v in np.linspace(0.0, 1.0, grid):
                for j in (1, 2):
                    bstar_integral(j, float(v), setting)
            return time.perf_counter() - t0
        finally:
            kernels._fast = saved

    t_pure = build(force_pure=True)
    print(f"\nBid-table quadrature, {grid}-point grid, n=4, k=2")
    print(f"{'impl':<10} {'build time':>12}")
    print(f"{'pure':<10} {t_pure * 1e3:>9.1f} ms")
    if _fast is not None:
        t_fast = build(force_pure=False)
        print(f"{'compiled':<10} {t_fast * 1e3:>9.1f} ms")
        print(f"{'speedup':<10} {t_pure / t_fast:>10.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rounds", type=int, default=1_000_000)
    parser.add_argument("--grid", type=int, default=512)
    args = parser.parse_args()
    if _fast is None:
        print("compiled extension not built; benchmarking the pure path only")
    bench_mc(args.rounds)
    bench_quadrature(args.grid)


if __name__ == "__main__":
    main()
