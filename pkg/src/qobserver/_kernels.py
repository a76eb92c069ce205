"""Numeric inner loops, JIT-compiled with numba when available.

The three kernels below dominate runtime: the matrix exponential and the
sequential scans that push an output row (or the full propagator) across a
uniform time grid.  Each has a single implementation that runs either as
plain numpy or compiled with ``numba.njit``.

Backend selection: numba is used when importable unless the environment
variable ``QOBSERVER_DISABLE_NUMBA=1`` is set, which forces the pure-numpy
path.  Both paths execute the same statements, so results agree to roundoff.
``benchmarks/bench_kernels.py`` times the two paths side by side.
"""

from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "QOBSERVER_DISABLE_NUMBA"

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get(ENV_FLAG, "0").lower() not in (
    "1",
    "true",
    "yes",
)


def _expm_impl(a):
    """exp(a) by scaling and squaring with a Taylor series run to roundoff.

    The input is scaled by 2**-s until its max-abs entry is <= 0.25, the
    series is summed until terms fall below 1e-18 of the partial sum, and
    the result is squared s times.  For the small generator matrices used
    here this meets a 1e-12 relative accuracy budget per entry.
    """
    n = a.shape[0]
    mu = np.max(np.abs(a))
    if mu == 0.0:
        return np.eye(n)
    s = 0
    scale = mu
    while scale > 0.25:
        scale *= 0.5
        s += 1
    b = a / (2.0**s)
    term = np.eye(n)
    acc = np.eye(n)
    for k in range(1, 40):
        term = (term @ b) / k
        acc = acc + term
        if np.max(np.abs(term)) <= 1e-18 * np.max(np.abs(acc)):
            break
    for _ in range(s):
        acc = acc @ acc
    return acc


def _row_scan_impl(row0, step, count):
    """Rows row0 @ step**k for k = 0..count, shape (count+1, n)."""
    n = row0.shape[0]
    out = np.empty((count + 1, n))
    r = row0.copy()
    out[0] = r
    for k in range(1, count + 1):
        r = r @ step
        out[k] = r
    return out


def _mat_scan_impl(start, step, count):
    """Matrices start @ step**k for k = 0..count, shape (count+1, n, n)."""
    n = start.shape[0]
    out = np.empty((count + 1, n, n))
    m = start.copy()
    out[0] = m
    for k in range(1, count + 1):
        m = m @ step
        out[k] = m
    return out


expm_numpy = _expm_impl
row_scan_numpy = _row_scan_impl
mat_scan_numpy = _mat_scan_impl

if HAVE_NUMBA:
    expm_numba = njit(cache=True)(_expm_impl)
    row_scan_numba = njit(cache=True)(_row_scan_impl)
    mat_scan_numba = njit(cache=True)(_mat_scan_impl)
else:  # pragma: no cover
    expm_numba = None
    row_scan_numba = None
    mat_scan_numba = None

if USE_NUMBA:
    expm = expm_numba
    row_scan = row_scan_numba
    mat_scan = mat_scan_numba
else:
    expm = expm_numpy
    row_scan = row_scan_numpy
    mat_scan = mat_scan_numpy


def backend() -> str:
    """Name of the active kernel backend, 'numba' or 'numpy'."""
    return "numba" if USE_NUMBA else "numpy"
