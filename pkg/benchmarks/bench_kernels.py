"""Compiled vs numpy kernels.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from cfprod import kernels
from cfprod.pressure import chebyshev_nodes


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def cases():
    x, w = chebyshev_nodes(128)
    rows = 20000
    a = np.arange(1, rows + 1, dtype=np.float64)
    start = np.full(rows, 1, dtype=np.int64)
    stop = np.full(rows, 200, dtype=np.int64)
    return {
        "power_sums s=1 (M=8,n=8)": lambda: kernels.power_sums_by_first(8, 8, 1.0, 1, 8),
        "power_sums s=0.8 (M=8,n=8)": lambda: kernels.power_sums_by_first(8, 8, 0.8, 1, 8),
        "pair_series 20000x199": lambda: kernels.pair_series(a, a + 1, a, 2 * a + 1, start, stop),
        "operator_matrix N=128 M=1024": lambda: kernels.operator_matrix(0.8, 1024, x, w),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = kernels.available()
    print(f"{'kernel':34s}" + "".join(f"{b:>12s}" for b in backends) + "   max rel diff")
    for name, fn in cases().items():
        times, outs = [], []
        for b in backends:
            prev = kernels.use_backend(b)
            try:
                t, out = _time(fn, args.repeat)
            finally:
                kernels.use_backend(prev)
            times.append(t)
            outs.append(np.asarray(out))
        ref = outs[0]
        diff = max(float(np.max(np.abs(o - ref) / np.maximum(np.abs(ref), 1e-300))) for o in outs)
        print(f"{name:34s}" + "".join(f"{t:11.4f}s" for t in times) + f"   {diff:.1e}")


if __name__ == "__main__":
    main()
