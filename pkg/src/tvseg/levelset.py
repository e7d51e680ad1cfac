"""Level crossings, jump sets and the level grid scanned by the exact solver.

At a boundary ``k`` the signal takes the multivalued value
``[min(f[k-1], f[k]), max(f[k-1], f[k])]``; the boundary crosses level
``c`` when ``c`` lies in that interval.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .signal import GridSignal

__all__ = ["LevelCandidate", "crossings", "jump_set", "level_grid", "candidate", "MIDPOINT_UNIQUE_LIMIT"]

# exact midpoints are added when f takes at most this many distinct values
MIDPOINT_UNIQUE_LIMIT = 64


@dataclass(frozen=True)
class LevelCandidate:
    level: float
    crossings: tuple


def crossings(f: GridSignal, c: float) -> list[int]:
    """Interior boundaries whose multivalued image contains ``c``.

    Boundaries strictly inside a run of cells equal to ``c`` are left out:
    a plateau at the level contributes only its two outer boundaries.
    """
    v = f.values
    if v.size < 2:
        return []
    # compare against c directly; products of differences can underflow
    left, right = v[:-1], v[1:]
    lo, hi = np.minimum(left, right), np.maximum(left, right)
    hit = (lo <= c) & (c <= hi) & ~((left == c) & (right == c))
    return [int(k) for k in np.flatnonzero(hit) + 1]


def candidate(f: GridSignal, c: float) -> LevelCandidate:
    return LevelCandidate(float(c), tuple(crossings(f, c)))


def jump_set(f: GridSignal, tol: float = 0.0) -> list[int]:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    v = f.values
    return [int(k) for k in np.flatnonzero(np.abs(np.diff(v)) > tol) + 1]


def level_grid(f: GridSignal, K: int) -> list[float]:
    """Sorted levels: ``K`` equispaced interior levels plus exact midpoints.

    Midpoints of every pair of distinct values are included when f has at
    most :data:`MIDPOINT_UNIQUE_LIMIT` distinct values.  The optimal decision
    level is the midpoint of two phase means, and every crossing pattern of a
    signal with finitely many values is realized at some pairwise midpoint,
    so on step signals the scan is exhaustive.
    """
    if K < 1:
        raise ValueError("K must be positive")
    uniq = np.unique(f.values)
    lo, hi = float(uniq[0]), float(uniq[-1])
    if lo == hi:
        return [lo]
    levels = [lo + (hi - lo) * (i + 1) / (K + 1) for i in range(K)]
    if uniq.size <= MIDPOINT_UNIQUE_LIMIT:
        i, j = np.triu_indices(uniq.size, k=1)
        levels.extend(((uniq[i] + uniq[j]) / 2.0).tolist())
    return [float(x) for x in np.unique(np.asarray(levels))]
