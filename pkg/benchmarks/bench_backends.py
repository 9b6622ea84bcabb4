"""Timing comparison of the numba kernels against the pure-numpy fallback.

Kernel micro-benchmarks import both implementations side by side; the
end-to-end trajectory benchmark re-executes this script in a subprocess
with HYPERHEAT_BACKEND set, because the backend is chosen at import time.

Usage: python benchmarks/bench_backends.py [--repeat N]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def _bench(fun, repeat):
    fun()  # warmup / jit compile
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fun()
        best = min(best, time.perf_counter() - t0)
    return best


def _instance():
    import hyperheat as hh

    rng = np.random.default_rng(0)
    edges = []
    nv = 40
    for _ in range(80):
        size = int(rng.integers(2, 5))
        edges.append(tuple(sorted(rng.choice(nv, size=size, replace=False).tolist())))
    edges.append(tuple(range(nv)))  # keep it connected
    g = hh.Hypergraph(nv - 4, 4, tuple(edges), tuple(rng.uniform(0.5, 2.0, 81)))
    x = np.round(rng.normal(size=nv), 1)  # coarse values create tie blocks
    return g, g.arrays(), x


def kernel_benchmarks(repeat):
    from hyperheat import _kernels_numba as knb
    from hyperheat import _kernels_numpy as knp

    g, arr, x = _instance()
    nv = g.n_vertices
    rows = np.arange(nv, dtype=np.int64)
    rng = np.random.default_rng(1)
    g0 = rng.normal(size=nv)

    print(f"instance: {nv} vertices, {g.n_edges} edges")
    print(f"{'kernel':<22}{'numba':>12}{'numpy':>12}{'speedup':>10}")
    for name in ("energy_value", "argmax_pairs", "minnorm_qp"):
        times = {}
        for label, mod in (("numba", knb), ("numpy", knp)):
            mx, mn = mod.edge_extrema(x, arr.members, arr.offsets)
            tie = 1e-6 * (1.0 + mx - mn)
            pe, pu, pv, po = mod.argmax_pairs_flat(
                x, arr.members, arr.offsets, mx, mn, tie
            )
            coef = arr.weights * (mx - mn)
            sizes = np.diff(po)
            theta0 = 1.0 / np.repeat(sizes.astype(np.float64), sizes)
            if name == "energy_value":
                fun = lambda m=mod: m.energy_value(
                    x, arr.members, arr.offsets, arr.weights, 2.0
                )
            elif name == "argmax_pairs":
                fun = lambda m=mod, mx=mx, mn=mn, tie=tie: m.argmax_pairs_flat(
                    x, arr.members, arr.offsets, mx, mn, tie
                )
            else:
                fun = lambda m=mod, th=theta0: m.minnorm_qp(
                    g0, th.copy(), coef, pe, pu, pv, po, rows, 500, 1e-30, 0.0
                )
            times[label] = _bench(fun, repeat)
        print(
            f"{name:<22}{times['numba'] * 1e6:>10.1f}us"
            f"{times['numpy'] * 1e6:>10.1f}us"
            f"{times['numpy'] / times['numba']:>9.1f}x"
        )


def trajectory_benchmark():
    import hyperheat as hh

    g = hh.Hypergraph(
        3, 2, ((0, 1), (1, 2), (2, 3), (0, 4), (1, 3), (0, 1, 2)),
        (1.0, 0.5, 2.0, 1.0, 0.7, 0.4),
    )
    a = hh.Schedule(
        times=np.array([0.0, 0.5, 1.0]),
        samples=np.array([[0.2, -0.1], [0.5, 0.3], [0.0, 0.1]]),
    )
    x0 = np.array([1.0, -0.5, 0.3, 0.2, -0.1])
    cfg = hh.SolverConfig(p=1.5, dt=2e-3, t_end=1.0)
    hh.implicit_euler(g, x0, a, None, hh.SolverConfig(p=1.5, dt=0.1, t_end=0.3))
    t0 = time.perf_counter()
    run = hh.implicit_euler(g, x0, a, None, cfg)
    elapsed = time.perf_counter() - t0
    per_step = elapsed / run.n_steps
    print(
        f"trajectory [{hh.backend_name():>5}]: {run.n_steps} steps in "
        f"{elapsed:.2f}s ({per_step * 1e3:.2f} ms/step)"
    )


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--trajectory-only", action="store_true")
    args = parser.parse_args()

    if args.trajectory_only:
        trajectory_benchmark()
        return

    kernel_benchmarks(args.repeat)
    print(flush=True)
    for backend in ("numba", "numpy"):
        env = dict(os.environ, HYPERHEAT_BACKEND=backend)
        subprocess.run(
            [sys.executable, __file__, "--trajectory-only"], env=env, check=True
        )


if __name__ == "__main__":
    main()
