"""Exact weighted 1-D total-variation denoising.

Solves ``min_x  0.5 * sum w[i] (x[i] - y[i])**2 + mu * sum |x[i+1] - x[i]|``
with ``w >= 0`` by the dynamic program of N. Johnson, "A dynamic
programming algorithm for the fused lasso and L0-segmentation" (2013).
The forward pass tracks the derivative of the partial objective as a
piecewise-linear function stored by its knots; the backward pass clips
through the recorded knots.
"""
from __future__ import annotations

import numpy as np

__all__ = ["tv_denoise_weighted"]


def _solve_positive(y: np.ndarray, w: np.ndarray, mu: float) -> np.ndarray:
    n = y.size
    if n == 1:
        return y.copy()
    size = 2 * n + 2
    x = np.zeros(size)
    a = np.zeros(size)
    b = np.zeros(size)
    tm = np.zeros(n - 1)
    tp = np.zeros(n - 1)

    tm[0] = -mu / w[0] + y[0]
    tp[0] = mu / w[0] + y[0]
    lo_i, hi_i = n - 1, n
    x[lo_i], x[hi_i] = tm[0], tp[0]
    a[lo_i], b[lo_i] = w[0], -w[0] * y[0] + mu
    a[hi_i], b[hi_i] = -w[0], w[0] * y[0] + mu
    afirst, bfirst = w[1], -w[1] * y[1] - mu
    alast, blast = -w[1], w[1] * y[1] - mu

    for k in range(1, n - 1):
        alo, blo = afirst, bfirst
        lo = lo_i
        while lo <= hi_i:
            if alo * x[lo] + blo > -mu:
                break
            alo += a[lo]
            blo += b[lo]
            lo += 1
        ahi, bhi = alast, blast
        hi = hi_i
        while hi >= lo:
            if -ahi * x[hi] - bhi < mu:
                break
            ahi += a[hi]
            bhi += b[hi]
            hi -= 1
        tm[k] = (-mu - blo) / alo
        lo_i = lo - 1
        x[lo_i] = tm[k]
        tp[k] = (mu + bhi) / (-ahi)
        hi_i = hi + 1
        x[hi_i] = tp[k]
        a[lo_i], b[lo_i] = alo, blo + mu
        a[hi_i], b[hi_i] = ahi, bhi + mu
        afirst, bfirst = w[k + 1], -w[k + 1] * y[k + 1] - mu
        alast, blast = -w[k + 1], w[k + 1] * y[k + 1] - mu

    alo, blo = afirst, bfirst
    lo = lo_i
    while lo <= hi_i:
        if alo * x[lo] + blo > 0:
            break
        alo += a[lo]
        blo += b[lo]
        lo += 1
    out = np.empty(n)
    out[-1] = -blo / alo
    for k in range(n - 2, -1, -1):
        out[k] = min(max(out[k + 1], tm[k]), tp[k])
    return out


def tv_denoise_weighted(y, w, mu: float) -> np.ndarray:
    """Minimizer of ``0.5 * sum w (x - y)**2 + mu * TV(x)``.

    Cells with zero weight are dropped and then filled from the nearest
    kept cell to the left (to the right at the start); any value between
    the neighbours is optimal there.  If every weight is zero the result is
    the constant mean of ``y``.
    """
    y = np.asarray(y, dtype=float)
    w = np.asarray(w, dtype=float)
    if y.shape != w.shape or y.ndim != 1:
        raise ValueError("y and w must be 1-D arrays of equal length")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    keep = np.flatnonzero(w > 0)
    if keep.size == 0:
        return np.full(y.size, float(np.mean(y)))
    if mu == 0:
        sol = y[keep]
    else:
        sol = _solve_positive(y[keep], w[keep], mu)
    out = np.empty(y.size)
    # index of the kept cell that supplies each position
    src = np.searchsorted(keep, np.arange(y.size), side="right") - 1
    src[src < 0] = 0
    out[:] = sol[src]
    return out
