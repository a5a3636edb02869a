"""Benchmark the step-up fixpoint kernel: compiled extension vs pure numpy.

The kernel is the hot spot of the whole package: every Monte Carlo FDR
trial runs it once, so the default validation workload calls it tens of
thousands of times.  This script times both backends on the same inputs
across pool sizes, for the uniform-weight case (where the pure backend can
use its sorted fast path) and the general nonuniform case (where it cannot).

Run:  python benchmarks/bench_stepup.py [--sizes 100,1000,10000] [--repeats 5]
"""

import argparse
import time

import numpy as np

from hammer._stepup import kstar_pure
from hammer.priors import harmonic_number

try:
    from hammer._stepup_core import kstar_scan
except ImportError:
    kstar_scan = None


def make_inputs(m, uniform, rng):
    p = rng.random(m) ** 2
    if uniform:
        weights = np.full(m, 1.0 / m)
    else:
        weights = rng.random(m)
        weights /= weights.sum()
    base = 0.1 * weights
    beta = np.arange(1, m + 1) / harmonic_number(m)
    return np.ascontiguousarray(p), np.ascontiguousarray(base), beta


def time_one(fn, args, repeats):
    # enough inner iterations to push each measurement over ~10 ms
    best = float("inf")
    calls = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(calls):
            fn(*args)
        elapsed = time.perf_counter() - t0
        if elapsed > 0.01:
            break
        calls *= 4
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(calls):
            fn(*args)
        best = min(best, (time.perf_counter() - t0) / calls)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="100,1000,10000",
                        help="comma-separated pool sizes (default 100,1000,10000)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats per cell, best is kept (default 5)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(args.seed)

    if kstar_scan is None:
        print("compiled kernel unavailable; timing the pure backend only\n")
    header = f"{'m':>8} {'weights':>10} {'pure':>12} {'compiled':>12} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for m in sizes:
        for uniform in (True, False):
            inputs = make_inputs(m, uniform, rng)
            k_pure = kstar_pure(*inputs)
            pure_t = time_one(kstar_pure, inputs, args.repeats)
            label = "uniform" if uniform else "nonuniform"
            if kstar_scan is None:
                print(f"{m:>8} {label:>10} {pure_t * 1e6:>10.1f}us {'-':>12} {'-':>8}")
                continue
            assert kstar_scan(*inputs) == k_pure, "backends disagree"
            comp_t = time_one(kstar_scan, inputs, args.repeats)
            print(f"{m:>8} {label:>10} {pure_t * 1e6:>10.1f}us "
                  f"{comp_t * 1e6:>10.1f}us {pure_t / comp_t:>7.1f}x")


if __name__ == "__main__":
    main()
