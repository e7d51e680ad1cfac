"""Chan-Vese energies on the uniform grid and their building blocks.

Discrete conventions: ``TV(w) = sum |w[i+1] - w[i]|`` (no boundary jumps)
and ``int g dx = (1/n) sum g[i]``.  On a binary ``u`` the total variation
is its jump count, i.e. the perimeter of ``{u = 1}`` inside (0, 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .signal import GridSignal

__all__ = [
    "EnergyParams",
    "BinarySegmentation",
    "PrefixSums",
    "GridMismatch",
    "total_variation",
    "chan_vese_energy",
    "relaxed_energy",
    "feps_energy",
    "optimal_constants",
    "prefix_sums",
    "segment_fidelity",
    "truncate",
]

# above this size sums go through math.fsum
_FSUM_THRESHOLD = 10_000


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class EnergyParams:
    lam: float
    epsilon: float = 0.1

    def __post_init__(self):
        if not (self.lam >= 0.0) or not math.isfinite(self.lam):
            raise ValueError("lambda must be a finite nonnegative number")
        if not (self.epsilon > 0.0):
            raise ValueError("epsilon must be positive")

    @property
    def eps_small(self) -> bool:
        """True in the regime epsilon < 1/(4 lambda) where the constants decouple."""
        return self.lam == 0.0 or self.epsilon < 1.0 / (4.0 * self.lam)


@dataclass(frozen=True)
class BinarySegmentation:
    """A {0,1}-valued cell function stored as its first value and jumps.

    ``jumps`` are interior boundary indices in ``1..n-1``; the value flips
    at each one.  No jumps means a constant function.
    """

    n: int
    first_value: int = 0
    jumps: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.first_value not in (0, 1):
            raise ValueError("first_value must be 0 or 1")
        jumps = tuple(int(k) for k in self.jumps)
        for a, b in zip(jumps, jumps[1:]):
            if b <= a:
                raise ValueError("jumps must be strictly increasing")
        if jumps and (jumps[0] < 1 or jumps[-1] > self.n - 1):
            raise ValueError("jump index out of range")
        object.__setattr__(self, "jumps", jumps)

    @classmethod
    def constant(cls, n: int, value: int = 0) -> "BinarySegmentation":
        return cls(n, value, ())

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "BinarySegmentation":
        arr = np.asarray(values)
        if arr.size == 0:
            raise ValueError("empty sequence")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("values must be 0 or 1")
        jumps = tuple(int(k) for k in np.flatnonzero(np.diff(arr)) + 1)
        return cls(int(arr.size), int(arr[0]), jumps)

    @property
    def is_constant(self) -> bool:
        return not self.jumps

    @property
    def jump_count(self) -> int:
        return len(self.jumps)

    def values(self) -> np.ndarray:
        out = np.empty(self.n)
        edges = (0, *self.jumps, self.n)
        v = float(self.first_value)
        for lo, hi in zip(edges[:-1], edges[1:]):
            out[lo:hi] = v
            v = 1.0 - v
        return out

    def complement(self) -> "BinarySegmentation":
        return BinarySegmentation(self.n, 1 - self.first_value, self.jumps)

    def jump_directions(self) -> list[int]:
        """+1 for each 0->1 jump, -1 for each 1->0 jump, left to right."""
        sign = 1 if self.first_value == 0 else -1
        out = []
        for _ in self.jumps:
            out.append(sign)
            sign = -sign
        return out

    def to_dict(self) -> dict:
        return {"first_value": self.first_value, "jumps": list(self.jumps)}


def _as_array(w) -> np.ndarray:
    if isinstance(w, GridSignal):
        return w.values
    if isinstance(w, BinarySegmentation):
        return w.values()
    return np.asarray(w, dtype=float).reshape(-1)


def _sum(x: np.ndarray) -> float:
    if x.size > _FSUM_THRESHOLD:
        return math.fsum(x)
    return float(np.sum(x))


def total_variation(w) -> float:
    arr = _as_array(w)
    if arr.size <= 1:
        return 0.0
    return _sum(np.abs(np.diff(arr)))


def _check_sizes(*arrays):
    n = arrays[0].size
    if any(a.size != n for a in arrays):
        raise GridMismatch("grid mismatch")


def _fidelity(u: np.ndarray, c1, c2, f: np.ndarray) -> float:
    # c1, c2 may be scalars or per-cell fields
    dens = u * (c1 - f) ** 2 + (1.0 - u) * (c2 - f) ** 2
    return _sum(dens) / f.size


def chan_vese_energy(u: BinarySegmentation, c1: float, c2: float,
                     f: GridSignal, p: EnergyParams) -> float:
    """Jump count plus lambda-weighted squared error of the two-phase fit."""
    if u.n != f.n:
        raise GridMismatch("grid mismatch")
    for c in (c1, c2):
        if not (0.0 <= c <= 1.0):
            raise ValueError("constant out of range")
    uv = u.values()
    return float(u.jump_count) + p.lam * _fidelity(uv, c1, c2, f.values)


def relaxed_energy(u, c1: float, c2: float, f: GridSignal, p: EnergyParams) -> float:
    """Convex relaxation over u in [0, 1]^n; +inf outside the box."""
    uv = _as_array(u)
    _check_sizes(uv, f.values)
    if np.any(uv < 0.0) or np.any(uv > 1.0):
        return math.inf
    return total_variation(uv) + p.lam * _fidelity(uv, c1, c2, f.values)


def feps_energy(u, v1, v2, f: GridSignal, p: EnergyParams) -> float:
    """Relaxed energy with the constants replaced by fields of penalized variation."""
    uv, a, b = _as_array(u), _as_array(v1), _as_array(v2)
    if a.size == 1:
        a = np.full(uv.size, a[0])
    if b.size == 1:
        b = np.full(uv.size, b[0])
    _check_sizes(uv, a, b, f.values)
    if np.any(uv < 0.0) or np.any(uv > 1.0):
        return math.inf
    tv_fields = total_variation(a) + total_variation(b)
    return (total_variation(uv) + tv_fields / p.epsilon
            + p.lam * _fidelity(uv, a, b, f.values))


def truncate(v) -> np.ndarray:
    """Entrywise truncation onto [0, 1]."""
    return np.clip(_as_array(v), 0.0, 1.0)


def optimal_constants(u, f: GridSignal) -> tuple[float, float]:
    """Phase means of f weighted by u and 1-u.

    An empty phase takes the global mean of f, which leaves the energy
    unchanged.  Results are clamped to [0, 1] when f lies there.
    """
    uv = _as_array(u)
    fv = f.values
    _check_sizes(uv, fv)
    w1 = _sum(uv)
    w2 = _sum(1.0 - uv)
    mean = _sum(fv) / fv.size
    c1 = _sum(uv * fv) / w1 if w1 > 0.0 else mean
    c2 = _sum((1.0 - uv) * fv) / w2 if w2 > 0.0 else mean
    if f.is_unit():
        c1 = min(max(c1, 0.0), 1.0)
        c2 = min(max(c2, 0.0), 1.0)
    return c1, c2


@dataclass(frozen=True, eq=False)
class PrefixSums:
    s1: np.ndarray
    s2: np.ndarray

    @property
    def n(self) -> int:
        return self.s1.size - 1

    def count_sum_sq(self, i: int, j: int) -> tuple[int, float, float]:
        return j - i, float(self.s1[j] - self.s1[i]), float(self.s2[j] - self.s2[i])


def prefix_sums(f: GridSignal) -> PrefixSums:
    s1 = np.concatenate(([0.0], np.cumsum(f.values)))
    s2 = np.concatenate(([0.0], np.cumsum(f.values ** 2)))
    s1.flags.writeable = False
    s2.flags.writeable = False
    return PrefixSums(s1, s2)


def segment_fidelity(ps: PrefixSums, i: int, j: int, c: float) -> float:
    """Sum of (c - f_k)**2 over cells i <= k < j, from prefix sums."""
    if not (0 <= i <= j <= ps.n):
        raise IndexError("segment index out of range")
    if i == j:
        return 0.0
    m, s, q = ps.count_sum_sq(i, j)
    return max(m * c * c - 2.0 * c * s + q, 0.0)
