#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times the two hot scan families on realistic workloads and prints a small
table. Backend selection goes through the same env flag the library uses,
so the numbers reflect exactly what ORBITLAB_BACKEND switches.

Usage: python benchmarks/bench_backends.py [--repeat 5]
"""

import argparse
import os
import time

import numpy as np


def bench(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def workloads():
    from orbitlab.fhbuilder import build
    from orbitlab.lspace import Ball, CoefVec, Side
    from orbitlab.orbits import HittingSet, find_ap, hitting_set
    from orbitlab.seqcore import ScalingSeq
    from orbitlab.shiftops import ShiftOp, WeightSeq

    one = ScalingSeq.constant(1.0)
    two_b = ShiftOp(Side.UNILATERAL, WeightSeq.constant(1.0), 2.0)
    e1 = CoefVec.basis(Side.UNILATERAL, 1)
    fu = build(one, two_b, [(e1, 1e-3)], 10**6, g=16)

    rng = np.random.default_rng(0)
    dense = HittingSet(
        np.flatnonzero(rng.random(10**6) < 0.4).astype(np.int64) + 1, 10**6
    )
    sparse = HittingSet(2 ** np.arange(1, 21, dtype=np.int64), 2**20)

    sq = ShiftOp(Side.UNILATERAL, WeightSeq.sqrt_ratio(), 0.5)
    idx = np.unique(rng.integers(1, 2000, size=300)).astype(np.int64)
    gen_x = CoefVec.from_pairs(
        Side.UNILATERAL, [(int(i), complex(rng.normal(), rng.normal())) for i in idx]
    )

    return {
        "hitting_set flat 1e6 (FU vector, 2B)": lambda: hitting_set(
            fu.x, one, two_b, Ball(e1, 1e-3), 10**6
        ),
        "hitting_set general 2e4 (sqrt weights)": lambda: hitting_set(
            gen_x, one, sq, Ball(e1, 0.5), 2 * 10**4
        ),
        "find_ap dense (d=0.4, N=1e6, m=3, K=500)": lambda: find_ap(
            dense, 3, 1, K=500
        ),
        "find_ap sparse (powers of 2, default K)": lambda: find_ap(sparse, 2, 1),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ns = ap.parse_args()

    results = {}
    for backend in ("numba", "numpy"):
        os.environ["ORBITLAB_BACKEND"] = backend
        from orbitlab import _kernels

        if backend == "numba":
            if not _kernels.HAVE_NUMBA:
                print("numba unavailable; skipping")
                continue
            _kernels.warm_kernels()
        loads = workloads()
        for name, fn in loads.items():
            fn()  # warm caches and jitted specializations
            results.setdefault(name, {})[backend] = bench(fn, ns.repeat)

    width = max(len(n) for n in results)
    print(f"{'workload':<{width}}  {'numba':>9}  {'numpy':>9}  {'speedup':>7}")
    for name, r in results.items():
        nb, np_ = r.get("numba"), r.get("numpy")
        speed = f"{np_ / nb:6.2f}x" if nb and np_ else "-"
        nb_s = f"{nb*1e3:8.1f}ms" if nb else "-"
        np_s = f"{np_*1e3:8.1f}ms" if np_ else "-"
        print(f"{name:<{width}}  {nb_s}  {np_s}  {speed}")


if __name__ == "__main__":
    main()
