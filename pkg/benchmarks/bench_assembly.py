"""Benchmark the click-assembly kernels: compiled extension vs numpy fallback.

Usage: python benchmarks/bench_assembly.py [--trials N]

Times the two hot kernels (ragged click assembly with dead-time merging, and
windowed counting) on realistic workloads, then times a full nominal
simulation under each backend.
"""

import argparse
import time

import numpy as np

from heraldsim import assembly
from heraldsim.config import ExperimentConfig
from heraldsim.source import simulate


def _workload(rng, n_trials, n_streams=4, lam=0.6):
    counts = rng.poisson(lam, size=(n_streams, n_trials)).astype(np.int64)
    times = rng.random(int(counts.sum())) * 2e-4
    return counts, times


def time_call(fn, *args, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=2_000_000)
    args = parser.parse_args()

    backends = assembly.available_backends()
    print(f"backends available: {', '.join(backends)} (active: {assembly.BACKEND})")

    rng = np.random.default_rng(0)
    counts, times = _workload(rng, args.trials)
    n_candidates = int(counts.sum())
    print(f"\nassemble_trials: {args.trials:,} trials, {n_candidates:,} candidates")
    results = {}
    for name, mod in backends.items():
        dt = time_call(mod.assemble_trials, args.trials, 5e-8, counts, times)
        results[name] = mod.assemble_trials(args.trials, 5e-8, counts, times)
        print(f"  {name:7s} {dt*1e3:8.1f} ms   {n_candidates/dt/1e6:6.1f} M candidates/s")
    if len(results) == 2:
        a, b = results.values()
        same = np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
        print(f"  outputs identical: {same}")

    offsets, merged = next(iter(results.values()))
    print(f"\nwindow_counts over {merged.size:,} clicks")
    for name, mod in backends.items():
        dt = time_call(mod.window_counts, offsets, merged, 0.0, 4e-5)
        print(f"  {name:7s} {dt*1e3:8.1f} ms")

    cfg = ExperimentConfig()
    n_sim = min(args.trials, 1_000_000)
    print(f"\nend-to-end simulate({n_sim:,} trials), single thread")
    for name, mod in backends.items():
        original = assembly.assemble_trials
        assembly.assemble_trials = mod.assemble_trials
        try:
            dt = time_call(simulate, cfg, n_sim, 11, repeats=2)
        finally:
            assembly.assemble_trials = original
        print(f"  {name:7s} {dt:8.2f} s   {n_sim/dt/1e3:6.0f} k trials/s")


if __name__ == "__main__":
    main()
