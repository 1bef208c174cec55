"""Dense high-order finite-difference matrices on a uniform grid.

Interior rows use centered stencils; rows near either end switch to
one-sided stencils of the same width so every node, boundary nodes
included, gets the full order of accuracy.
"""
from functools import lru_cache
from math import factorial

import numpy as np


def fd_weights(offsets, order):
    """Weights ``w`` with ``f^(order)(0) ~ sum w_k f(offsets_k)`` (unit spacing)."""
    offsets = np.asarray(offsets, dtype=float)
    m = offsets.size
    if order >= m:
        raise ValueError("need more points than the derivative order")
    vander = np.vander(offsets, m, increasing=True).T  # row p: offsets**p
    rhs = np.zeros(m)
    rhs[order] = factorial(order)
    return np.linalg.solve(vander, rhs)


@lru_cache(maxsize=64)
def _matrix(N, order, accuracy):
    size = N + 1
    # centered rows: 2*half+1 points; one-sided rows: order+accuracy points
    width = order + accuracy
    half = (accuracy + order - 1) // 2
    central = np.arange(-half, half + 1)
    d = np.zeros((size, size))
    wc = fd_weights(central, order)
    for i in range(size):
        if half <= i <= N - half:
            d[i, i - half : i + half + 1] = wc
            continue
        start = 0 if i < half else size - width
        idx = np.arange(start, start + width)
        d[i, idx] = fd_weights(idx - i, order)
    d.setflags(write=False)
    return d


def derivative_matrix(N, order, accuracy=4, h=None):
    """``(N+1) x (N+1)`` matrix of the ``order``-th derivative on ``[0, 1]``."""
    h = 1.0 / N if h is None else h
    return _matrix(int(N), int(order), int(accuracy)) / h**order


def simpson(f, h):
    """Composite Simpson rule on an odd number of equally spaced samples."""
    f = np.asarray(f)
    if f.size % 2 == 0:
        raise ValueError("Simpson's rule needs an even number of intervals")
    return h / 3.0 * (f[0] + f[-1] + 4.0 * f[1:-1:2].sum() + 2.0 * f[2:-1:2].sum())
