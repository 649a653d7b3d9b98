#!/usr/bin/env python3
"""Benchmark the compiled vote-accumulation kernel against the numpy fallback.

Both kernels implement the identical contract, so the script first checks the
outputs agree on every workload, then reports best-of-N wall times and the
speedup.  Run from a checkout or an installed environment:

    python3 benchmarks/bench_accumulate.py [--repeats 5]
"""

import argparse
import math
import time

import numpy as np

from voteloc._kernels import accum_np

try:
    from voteloc._kernels import _accum_cy
except ImportError:  # pragma: no cover - build without the extension
    _accum_cy = None

HEIGHT, WIDTH = 480.0, 640.0
CELL = 9
SIZE_EPS = 0.02

WORKLOADS = [
    (1_000, 10_000),
    (3_763, 10_000),   # default localization load for a 640x480 map
    (3_763, 100_000),
    (8_000, 1_000_000),
]


def workload(n_points, n_pairs, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform((0.0, 0.0), (WIDTH - 1.0, HEIGHT - 1.0), (n_points, 2))
    ang = rng.uniform(-np.pi, np.pi, n_points)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    sizes = rng.uniform(-0.5, 0.5, (n_points, 2))
    pairs = rng.integers(0, n_points, (int(n_pairs * 1.1), 2))
    pairs = pairs[pairs[:, 0] != pairs[:, 1]][:n_pairs]
    pairs = np.sort(pairs, axis=1).astype(np.int64)
    return pts, dirs, sizes, pairs


def run(kernel, args):
    pts, dirs, sizes, pairs = args
    rows = math.ceil(HEIGHT / CELL)
    cols = math.ceil(WIDTH / CELL)
    return kernel.accumulate_pairs(
        pts, dirs, sizes, pairs, CELL, rows, cols, HEIGHT, WIDTH, True, False, SIZE_EPS
    )


def best_time(kernel, args, repeats):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        run(kernel, args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5, help="timing repeats (best kept)")
    ap.add_argument("--seed", type=int, default=0)
    opts = ap.parse_args()

    if _accum_cy is None:
        print("compiled kernel not available; nothing to compare")
        return

    print(f"{'points':>8} {'pairs':>9} {'numpy':>10} {'cython':>10} {'speedup':>8}")
    for n_points, n_pairs in WORKLOADS:
        args = workload(n_points, n_pairs, opts.seed)
        v_np, ss_np, sc_np = run(accum_np, args)
        v_cy, ss_cy, sc_cy = run(_accum_cy, args)
        assert (v_np == v_cy).all() and (sc_np == sc_cy).all()
        assert np.allclose(ss_np, ss_cy, rtol=1e-12, atol=0)
        t_np = best_time(accum_np, args, opts.repeats)
        t_cy = best_time(_accum_cy, args, opts.repeats)
        print(
            f"{n_points:>8} {n_pairs:>9} {t_np * 1e3:>8.2f}ms {t_cy * 1e3:>8.2f}ms "
            f"{t_np / t_cy:>7.1f}x"
        )
    print("outputs agree on every workload (votes and counts exact, sums to 1e-12)")


if __name__ == "__main__":
    main()
