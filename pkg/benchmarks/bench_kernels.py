"""Timing comparison of the jitted and pure-numpy detection kernels.

Run:  python3 benchmarks/bench_kernels.py

The jitted path is what COOPALIGN_NUMBA=1 (the default, when numba imports)
dispatches to; COOPALIGN_NUMBA=0 forces the numpy path.  The first jitted
call compiles, so it is warmed up before timing.
"""

import time

import numpy as np

from coopalign import _kernels


def _instance(rng, n_obs, n_pts):
    y = rng.normal(size=n_obs) + 1j * rng.normal(size=n_obs)
    pts = rng.normal(size=n_pts) + 1j * rng.normal(size=n_pts)
    return y, pts


def _time(fn, y, pts, repeats=5):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(y, pts)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    sizes = [(1000, 343), (10000, 2401), (20000, 6561)]
    print(f"numba available: {_kernels.HAVE_NUMBA}, "
          f"dispatch uses numba: {_kernels.USE_NUMBA}")
    header = f"{'observations':>12} {'candidates':>10} {'numpy':>10}"
    if _kernels.HAVE_NUMBA:
        header += f" {'numba':>10} {'speedup':>8}"
    print(header)
    if _kernels.HAVE_NUMBA:
        y, pts = _instance(rng, 16, 16)
        _kernels.nearest_point_numba(y, pts)        # compile outside timing
    for n_obs, n_pts in sizes:
        y, pts = _instance(rng, n_obs, n_pts)
        t_np = _time(_kernels.nearest_point_numpy, y, pts)
        row = f"{n_obs:>12} {n_pts:>10} {t_np * 1e3:>8.2f}ms"
        if _kernels.HAVE_NUMBA:
            t_nb = _time(_kernels.nearest_point_numba, y, pts)
            row += f" {t_nb * 1e3:>8.2f}ms {t_np / t_nb:>7.1f}x"
            same = np.array_equal(_kernels.nearest_point_numba(y, pts),
                                  _kernels.nearest_point_numpy(y, pts))
            row += "" if same else "  MISMATCH"
        print(row)


if __name__ == "__main__":
    main()
