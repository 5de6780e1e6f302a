"""Time the numba kernels against the pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call per kernel compiles (or loads the on-disk cache) and is
excluded from the timings.
"""

import argparse
import time

import numpy as np

from searchgame import kernels, presets
from searchgame.regions import SimplexGrid
from searchgame.solver import solve_batch
from searchgame.strategies import Greedy, simulate


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    B = rng.dirichlet(np.ones(6), size=20000)
    P = rng.dirichlet(np.ones(6), size=6)
    K, _ = kernels.expand(B, P, 1 - 1e-12)
    children = rng.integers(-1, 1000, size=B.shape)
    v_next = rng.random(1000)
    U = rng.random((50000, 40))
    init = kernels.row_cdfs(np.full(4, 0.25))
    cdfs = kernels.row_cdfs(rng.dirichlet(np.ones(4), size=(39, 4)))
    actions = rng.integers(0, 4, size=40)
    grid = SimplexGrid(3, 30).points
    fig2 = presets.figure2().schedule
    uni = presets.uniform(4)

    yield "expand 20000x6", lambda: kernels.expand(B, P, 1 - 1e-12)
    yield "backup 20000x6", lambda: kernels.backup(B, children, v_next, True, 1.0, 1 - 1e-12)
    yield "first_hits 50000x40", lambda: kernels.first_hits(U, init, cdfs, actions)
    yield "region grid N=30 T=9", lambda: solve_batch(fig2, grid, 9)
    yield "simulate 2e5 trials T=40", lambda: simulate(uni, Greedy(), Greedy(), 40, 200_000, 7)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not kernels.HAVE_NUMBA:
        print("numba not installed; nothing to compare")
        return
    print(f"{'case':28s} {'numpy s':>10s} {'numba s':>10s} {'speedup':>8s}")
    for name, fn in cases():
        with kernels.use_backend("numba"):
            fn()  # compile / load cache
            t_nb = best_of(fn, args.repeat)
        with kernels.use_backend("numpy"):
            t_np = best_of(fn, args.repeat)
        print(f"{name:28s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
