"""Compare the numba and pure-numpy lanes of the PF solver kernels.

Usage: python benchmarks/bench_kernels.py [--sizes 10x100,4x30] [--repeat 5]

The same pairwise Frank-Wolfe iteration runs on both lanes; the numba lane
carries its own rectangular Hungarian oracle, the numpy lane delegates to
scipy.optimize.linear_sum_assignment.  PRESCHED_PURE_NUMPY=1 makes the
numpy lane the package-wide default; this script times both explicitly.
"""

import argparse
import time

import numpy as np

from presched import _fw
from presched.pfrates import solve_pf


def make_instance(m, n, seed):
    rng = np.random.default_rng(seed)
    lam = np.ones((m, n))
    special = max(1, n // 5)
    lam[min(2, m) :, :special] = 0.0
    jitter = rng.uniform(0.5, 2.0, size=(m, n))
    lam = lam * jitter
    for j in range(n):
        if not (lam[:, j] > 0).any():
            lam[0, j] = 1.0
    return lam


def time_lane(lam, lane, tol, max_iter, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = solve_pf(lam, tol=tol, max_iter=max_iter, lane=lane)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="4x30,10x100,10x300")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--tol", type=float, default=1e-5)
    parser.add_argument("--max-iter", type=int, default=5000)
    args = parser.parse_args()

    if not _fw.HAS_NUMBA:
        print("numba unavailable: only the numpy lane will run")

    print(f"{'size':>10} {'lane':>6} {'best_s':>10} {'iters':>7} {'gap':>12} {'objective':>14}")
    for size in args.sizes.split(","):
        m, n = (int(v) for v in size.strip().split("x"))
        lam = make_instance(m, n, seed=0)
        # warm both lanes once so JIT compilation is not timed
        solve_pf(lam, tol=args.tol, max_iter=50, lane="numba")
        solve_pf(lam, tol=args.tol, max_iter=50, lane="numpy")
        rows = []
        for lane in ("numba", "numpy"):
            if lane == "numba" and not _fw.HAS_NUMBA:
                continue
            secs, res = time_lane(lam, lane, args.tol, args.max_iter, args.repeat)
            rows.append((lane, secs, res))
            print(
                f"{size:>10} {lane:>6} {secs:>10.4f} {res.iterations:>7}"
                f" {res.gap:>12.3e} {res.objective:>14.6f}"
            )
        if len(rows) == 2:
            speedup = rows[1][1] / rows[0][1]
            drift = abs(rows[0][2].objective - rows[1][2].objective)
            print(f"{'':>10} numba speedup {speedup:.1f}x, objective drift {drift:.2e}")


if __name__ == "__main__":
    main()
