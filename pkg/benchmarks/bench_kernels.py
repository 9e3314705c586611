#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the two hot paths (geodesic walk, propagator triangle) on both
backends and prints a small table with speedups.  Results also serve as a
cross-check: the backends must agree to near machine precision.
"""

import time

import numpy as np

import pathgap as pg
from pathgap._backend import available_backends
from pathgap.gradients import _stage_ricci
from pathgap.sampling import TimeGrid, batch_increments

from_pathgap_kind = {"euclidean": 0, "sphere": 1, "hyperbolic": 2}


def time_call(fn, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_simulate(backends, n_paths=2000, n_steps=512):
    print(f"\ngeodesic walk: {n_paths} paths x {n_steps} steps")
    for kind, m in [("sphere", pg.sphere(3, 1.0)), ("hyperbolic", pg.hyperbolic(2, -1.0))]:
        grid = TimeGrid.uniform(1.0, n_steps)
        inc = batch_increments(grid, m.dim, seed=1, indices=range(n_paths))
        record = np.array([n_steps], dtype=np.int64)
        base = m.basepoint()
        results = {}
        times = {}
        for name, kern in backends.items():
            times[name], results[name] = time_call(
                lambda kern=kern: kern.simulate_paths(
                    from_pathgap_kind[kind], m.kappa, m.dim,
                    base.position, base.frame, inc, record,
                )
            )
        line = f"  {kind:11s} " + "  ".join(
            f"{name}: {times[name] * 1e3:8.1f} ms" for name in sorted(times)
        )
        if len(times) == 2:
            line += f"  speedup: {times['python'] / times['compiled']:.1f}x"
            diff = max(
                np.abs(results["python"][0] - results["compiled"][0]).max(),
                np.abs(results["python"][1] - results["compiled"][1]).max(),
            )
            line += f"  max diff: {diff:.1e}"
        print(line)


def bench_resolvent(backends, n_steps=512, dim=2):
    print(f"\npropagator triangle: n = {n_steps}, d = {dim}")
    def ric(t):
        return np.array(
            [[0.5 + 0.3 * np.sin(2 * t), 0.2 * np.cos(3 * t)],
             [-0.2 * np.cos(3 * t), 0.6 - 0.2 * np.sin(t)]]
        )

    m = pg.synthetic_ricci_path(dim, ric)
    grid = TimeGrid.uniform(1.0, n_steps)
    stages = _stage_ricci(m, grid)
    results = {}
    times = {}
    for name, kern in backends.items():
        times[name], results[name] = time_call(
            lambda kern=kern: kern.resolvent_triangle(stages, grid.dts)
        )
    line = "  " + "  ".join(f"{name}: {times[name] * 1e3:8.1f} ms" for name in sorted(times))
    if len(times) == 2:
        line += f"  speedup: {times['python'] / times['compiled']:.1f}x"
        line += f"  max diff: {np.abs(results['python'] - results['compiled']).max():.1e}"
    print(line)


def main():
    backends = available_backends()
    print(f"backends available: {sorted(backends)} (default: {pg.backend_name()})")
    bench_simulate(backends)
    bench_resolvent(backends)


if __name__ == "__main__":
    main()
