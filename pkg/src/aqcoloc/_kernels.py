"""Numeric kernels behind the correlation and calibration statistics.

Each kernel has a numba ``@njit`` build and a pure-numpy build. The numba
path is used when numba imports and ``AQCOLOC_DISABLE_NUMBA`` is unset (or
``0``); set it to ``1`` to force the numpy path.
"""

from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("AQCOLOC_DISABLE_NUMBA", "").strip().lower()
DISABLE_NUMBA = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None


# numpy path

def average_ranks_numpy(x):
    """1-based ranks; tied values share the mean of the ranks they span."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    order = np.argsort(x)
    xs = x[order]
    starts_mask = np.empty(n, dtype=bool)
    if n:
        starts_mask[0] = True
        starts_mask[1:] = xs[1:] != xs[:-1]
    starts = np.flatnonzero(starts_mask)
    ends = np.append(starts[1:], n)
    avg = (starts + ends - 1) / 2.0 + 1.0
    ranks = np.empty(n, dtype=np.float64)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def centered_moments_numpy(x, y):
    """``(mean_x, mean_y, sxx, syy, sxy)`` via the two-pass formula."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    mx = x.mean()
    my = y.mean()
    dx = x - mx
    dy = y - my
    return mx, my, float(np.dot(dx, dx)), float(np.dot(dy, dy)), float(np.dot(dx, dy))


# loop path, compiled by numba when available

def _tie_ranks_loop(x, order):
    # numba's argsort is far slower than numpy's, so the caller sorts
    n = x.shape[0]
    ranks = np.empty(n, dtype=np.float64)
    i = 0
    while i < n:
        j = i + 1
        while j < n and x[order[j]] == x[order[i]]:
            j += 1
        r = (i + j - 1) / 2.0 + 1.0
        for k in range(i, j):
            ranks[order[k]] = r
        i = j
    return ranks


def _centered_moments_loop(x, y):
    n = x.shape[0]
    sx = 0.0
    sy = 0.0
    for i in range(n):
        sx += x[i]
        sy += y[i]
    mx = sx / n
    my = sy / n
    sxx = 0.0
    syy = 0.0
    sxy = 0.0
    for i in range(n):
        dx = x[i] - mx
        dy = y[i] - my
        sxx += dx * dx
        syy += dy * dy
        sxy += dx * dy
    return mx, my, sxx, syy, sxy


if numba is not None:
    _tie_ranks_nb = numba.njit(cache=True)(_tie_ranks_loop)
    _centered_moments_nb = numba.njit(cache=True)(_centered_moments_loop)

    def average_ranks_numba(x):
        x = np.ascontiguousarray(x, dtype=np.float64)
        return _tie_ranks_nb(x, np.argsort(x))

    def centered_moments_numba(x, y):
        return _centered_moments_nb(
            np.ascontiguousarray(x, dtype=np.float64),
            np.ascontiguousarray(y, dtype=np.float64),
        )
else:  # pragma: no cover
    average_ranks_numba = None
    centered_moments_numba = None


if numba is not None and not DISABLE_NUMBA:
    BACKEND = "numba"
    average_ranks = average_ranks_numba
    centered_moments = centered_moments_numba
else:
    BACKEND = "numpy"
    average_ranks = average_ranks_numpy
    centered_moments = centered_moments_numpy
