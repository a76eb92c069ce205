#!/usr/bin/env python3
"""Timing comparison of the numba and pure-numpy kernel paths.

Runs each kernel on workloads representative of a convergence verification
(4x4 generators, tens of thousands of scan steps) and prints per-call
timings for both backends plus the resulting speedup.  The public API uses
whichever backend was selected at import time; rerun the whole script with
QOBSERVER_DISABLE_NUMBA=1 to time a full `verify_convergence` on the numpy
path.

Usage:
    python3 benchmarks/bench_kernels.py
    QOBSERVER_DISABLE_NUMBA=1 python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from qobserver import PlantSpec, synthesize_observer, verify_convergence
from qobserver import _kernels


def time_call(fn, *args, repeats=20):
    fn(*args)  # warm-up (JIT compile, caches)
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernel(name, numpy_fn, numba_fn, args):
    t_np = time_call(numpy_fn, *args)
    if numba_fn is not None:
        t_nb = time_call(numba_fn, *args)
        ratio = t_np / t_nb if t_nb > 0 else float("inf")
        print(f"{name:<28s} numpy {t_np * 1e3:9.3f} ms   numba {t_nb * 1e3:9.3f} ms   "
              f"speedup x{ratio:.1f}")
    else:
        print(f"{name:<28s} numpy {t_np * 1e3:9.3f} ms   numba unavailable")


def main():
    print(f"active backend: {_kernels.backend()}")
    rng = np.random.default_rng(0)

    a = np.ascontiguousarray(rng.normal(size=(4, 4)))
    step = np.ascontiguousarray(_kernels.expm_numpy(a * 1e-3))
    row = np.ascontiguousarray(rng.normal(size=4))
    start = np.ascontiguousarray(np.eye(4))

    def expm_loop_np(a):
        for _ in range(200):
            _kernels.expm_numpy(a)

    def expm_loop_nb(a):
        for _ in range(200):
            _kernels.expm_numba(a)

    bench_kernel(
        "expm 4x4 (200 calls)",
        expm_loop_np,
        expm_loop_nb if _kernels.HAVE_NUMBA else None,
        (a,),
    )
    bench_kernel(
        "row_scan 40k steps",
        _kernels.row_scan_numpy,
        _kernels.row_scan_numba,
        (row, step, 40_000),
    )
    bench_kernel(
        "mat_scan 10k steps",
        _kernels.mat_scan_numpy,
        _kernels.mat_scan_numba,
        (start, step, 10_000),
    )

    design = synthesize_observer(PlantSpec([1.0, 0.0]), 1.0, [0.2, 0.0])
    start_t = time.perf_counter()
    report = verify_convergence(design)
    elapsed = time.perf_counter() - start_t
    print(f"verify_convergence ladder    {elapsed * 1e3:9.3f} ms "
          f"(backend {_kernels.backend()}, passed={report.passed})")


if __name__ == "__main__":
    main()
