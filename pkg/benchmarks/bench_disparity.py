#!/usr/bin/env python3
"""Benchmark the block-matching kernels: numba JIT vs pure-numpy fallback.

Times the standard workload (640x480, max_disparity 64) at block granularity
(step 5) and dense (step 1).  The first jitted call compiles, so each backend
is warmed once before timing.

    python benchmarks/bench_disparity.py [--repeats 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from stereofuse import _kernels
from stereofuse.disparity import DisparityParams, compute_disparity_map


def make_pair(width=640, height=480, shift=12, seed=7):
    rng = np.random.default_rng(seed)
    tex = rng.integers(0, 256, size=(height, width + shift), dtype=np.uint8)
    return tex[:, :width].copy(), tex[:, shift : width + shift].copy()


def time_backend(left, right, params, backend, repeats):
    compute_disparity_map(left, right, params, backend=backend)  # warm-up / JIT
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        compute_disparity_map(left, right, params, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    left, right = make_pair()
    backends = ["numpy"] + (["numba"] if _kernels.HAVE_NUMBA else [])
    if not _kernels.HAVE_NUMBA:
        print("note: numba unavailable or disabled (STEREOFUSE_NUMBA)")

    print(f"640x480 pair, max_disparity 64, best of {args.repeats}")
    print(f"{'config':<28} " + " ".join(f"{b:>12}" for b in backends))
    results = {}
    for label, step in [("block granularity (step 5)", 5), ("dense (step 1)", 1)]:
        params = DisparityParams(max_disparity=64, block_step=step)
        row = []
        for backend in backends:
            seconds = time_backend(left, right, params, backend, args.repeats)
            results[(step, backend)] = seconds
            row.append(f"{seconds * 1000:>9.1f} ms")
        print(f"{label:<28} " + " ".join(f"{cell:>12}" for cell in row))

    if _kernels.HAVE_NUMBA:
        for step in (5, 1):
            speedup = results[(step, "numpy")] / results[(step, "numba")]
            print(f"numba speedup at step {step}: {speedup:.1f}x")

    a = compute_disparity_map(left, right, DisparityParams(max_disparity=64), backend="numpy")
    if _kernels.HAVE_NUMBA:
        b = compute_disparity_map(left, right, DisparityParams(max_disparity=64), backend="numba")
        assert np.array_equal(a, b), "backends disagree"
        print("backends bit-identical: yes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
