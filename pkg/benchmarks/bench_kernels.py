"""Timing comparison of the compiled kernels against the numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Imports both implementations directly (bypassing the one-shot backend
selection) so a single process can time the pair side by side.  Reports the
best of several repetitions per kernel and the cython speedup.
"""

import time

import numpy as np

from eitdsm import kernels_numpy

try:
    from eitdsm import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeats=5):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def solver_problem(n):
    """Five-point operator for -div(sigma grad u) with a random positive
    sigma, plus a compatible mean-zero load."""
    rng = np.random.default_rng(42)
    sigma = 1.0 + rng.random((n, n))
    cx = 2.0 / (1.0 / sigma[:, :-1] + 1.0 / sigma[:, 1:])
    cy = 2.0 / (1.0 / sigma[:-1, :] + 1.0 / sigma[1:, :])
    b = rng.standard_normal((n, n))
    b -= b.mean()
    diag = np.zeros((n, n))
    diag[:, :-1] += cx
    diag[:, 1:] += cx
    diag[:-1, :] += cy
    diag[1:, :] += cy
    active = np.ones((n, n))
    return cx, cy, b, 1.0 / diag, active


def main():
    rows = []

    n = 128
    cx, cy, b, inv_diag, active = solver_problem(n)
    rows.append((
        f"fv_matvec {n}x{n} (x100)",
        best_of(lambda: [kernels_numpy.fv_matvec(cx, cy, b) for _ in range(100)]),
        None if _kernels is None else
        best_of(lambda: [_kernels.fv_matvec(cx, cy, b) for _ in range(100)]),
    ))
    rows.append((
        f"cg_solve {n}x{n} tol 1e-10",
        best_of(lambda: kernels_numpy.cg_solve(
            cx, cy, b, inv_diag, active, 1e-10, 20000), repeats=3),
        None if _kernels is None else
        best_of(lambda: _kernels.cg_solve(
            cx, cy, b, inv_diag, active, 1e-10, 20000), repeats=3),
    ))

    rng = np.random.default_rng(7)
    x = rng.standard_normal((8, 64, 64, 32))
    y, arg = kernels_numpy.maxpool2_fwd(x)
    gy = rng.standard_normal(y.shape)
    rows.append((
        "maxpool2_fwd 8x64x64x32 (x50)",
        best_of(lambda: [kernels_numpy.maxpool2_fwd(x) for _ in range(50)]),
        None if _kernels is None else
        best_of(lambda: [_kernels.maxpool2_fwd(x) for _ in range(50)]),
    ))
    rows.append((
        "maxpool2_bwd 8x64x64x32 (x50)",
        best_of(lambda: [kernels_numpy.maxpool2_bwd(gy, arg) for _ in range(50)]),
        None if _kernels is None else
        best_of(lambda: [_kernels.maxpool2_bwd(gy, arg) for _ in range(50)]),
    ))

    if _kernels is None:
        print("compiled extension not available; numpy timings only")
    width = max(len(r[0]) for r in rows)
    header = f"{'kernel':<{width}}  {'numpy':>9}  {'cython':>9}  {'speedup':>7}"
    print(header)
    print("-" * len(header))
    for name, t_np, t_cy in rows:
        if t_cy is None:
            print(f"{name:<{width}}  {t_np:>8.4f}s  {'-':>9}  {'-':>7}")
        else:
            print(f"{name:<{width}}  {t_np:>8.4f}s  {t_cy:>8.4f}s  "
                  f"{t_np / t_cy:>6.1f}x")


if __name__ == "__main__":
    main()
