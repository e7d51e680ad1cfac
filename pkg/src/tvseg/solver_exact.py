"""Global minimization of the discrete two-phase Chan-Vese energy.

Every jump of a minimizer sits where f crosses the decision level
``M = (c1 + c2) / 2`` (in the multivalued sense at jumps of f), and for a
step signal every jump of a minimizer is a jump of f.  The solvers here
turn that into a finite search:

* :func:`best_on_level` enumerates all binary functions that are constant
  between consecutive crossings of one level, each with its own optimal
  constants.
* :func:`solve_exact` scans the level grid and keeps the best candidate.
* :func:`solve_piecewise_constant` enumerates over the jump set of f.
* :func:`dp_fixed_constants` is the exact minimizer for *fixed* constants,
  a two-state shortest path; :func:`refine_alternating` iterates it with
  constant updates and serves as the fallback for levels with too many
  crossings.
* :func:`brute_force` searches all ``2**n`` cell assignments (test oracle).

Candidates compare by a total order: energy (ties within a relative
``1e-12``), then jump count, then the jump sequence lexicographically,
then the first value.  Constants come before binary functions because
they have no jumps.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .energy import (
    BinarySegmentation,
    EnergyParams,
    PrefixSums,
    chan_vese_energy,
    optimal_constants,
    prefix_sums,
)
from .levelset import LevelCandidate, candidate, jump_set, level_grid
from .signal import GridSignal

__all__ = [
    "SegmentationResult",
    "CapacityError",
    "ENUMERATION_CAP",
    "ORACLE_LIMIT",
    "best_on_level",
    "solve_exact",
    "solve_piecewise_constant",
    "dp_fixed_constants",
    "refine_alternating",
    "brute_force",
    "evaluate",
    "select_best",
]

ENUMERATION_CAP = 20
ORACLE_LIMIT = 16
DEFAULT_LEVELS = 256
TIE_RTOL = 1e-12

# vectorized energies only shortlist; the shortlist is re-scored exactly
_SHORTLIST_ATOL = 1e-9
_SHORTLIST_MAX = 4096
_CHUNK_BITS = 15

METHODS = ("exact", "piecewise-constant", "dp", "gd", "brute")


class CapacityError(RuntimeError):
    """A search space exceeds its configured cap."""


@dataclass(frozen=True)
class SegmentationResult:
    u: BinarySegmentation
    c1: float
    c2: float
    energy: float
    level: float
    method: str
    candidates: int = 0
    iterations: int = 0
    relaxed_energy: float | None = None
    history: tuple = field(default=(), compare=False)

    @property
    def is_constant(self) -> bool:
        return self.u.is_constant

    def to_dict(self) -> dict:
        out = {
            "u": self.u.to_dict(),
            "c1": self.c1,
            "c2": self.c2,
            "energy": self.energy,
            "level": self.level,
            "method": self.method,
            "candidates": self.candidates,
            "iterations": self.iterations,
        }
        if self.relaxed_energy is not None:
            out["relaxed_energy"] = self.relaxed_energy
        return out

    @classmethod
    def from_dict(cls, d: dict, n: int) -> "SegmentationResult":
        u = BinarySegmentation(n, int(d["u"]["first_value"]), tuple(d["u"]["jumps"]))
        return cls(u=u, c1=float(d["c1"]), c2=float(d["c2"]), energy=float(d["energy"]),
                   level=float(d["level"]), method=str(d["method"]),
                   candidates=int(d.get("candidates", 0)), iterations=int(d.get("iterations", 0)),
                   relaxed_energy=d.get("relaxed_energy"))


def _require_unit(f: GridSignal):
    if not f.is_unit():
        raise ValueError("signal must lie in [0, 1]; normalize it first")


def evaluate(u: BinarySegmentation, f: GridSignal, p: EnergyParams, method: str,
             **counters) -> SegmentationResult:
    """Score ``u`` with its optimal constants."""
    c1, c2 = optimal_constants(u, f)
    energy = chan_vese_energy(u, c1, c2, f, p)
    return SegmentationResult(u, c1, c2, energy, 0.5 * (c1 + c2), method, **counters)


def _order_key(r: SegmentationResult):
    return (r.u.jump_count, r.u.jumps, r.u.first_value)


def select_best(results: Iterable[SegmentationResult]) -> SegmentationResult:
    results = list(results)
    if not results:
        raise ValueError("no candidates")
    e_min = min(r.energy for r in results)
    cutoff = e_min + TIE_RTOL * max(1.0, abs(e_min))
    return min((r for r in results if r.energy <= cutoff), key=_order_key)


def _constant_results(f: GridSignal, p: EnergyParams, method: str) -> list[SegmentationResult]:
    return [evaluate(BinarySegmentation.constant(f.n, v), f, p, method) for v in (0, 1)]


# ---------------------------------------------------------------- enumeration

def _subset_sums(vals: np.ndarray) -> np.ndarray:
    """Sums over all subsets; entry ``mask`` sums vals[j] for bits j of mask."""
    out = np.zeros(1)
    for v in vals:
        out = np.concatenate((out, out + v))
    return out


def _internal_jumps(bits: int) -> np.ndarray:
    idx = np.arange(1 << bits, dtype=np.int64)
    if bits <= 1:
        return np.zeros(idx.size, dtype=np.int64)
    flips = (idx ^ (idx >> 1)) & ((1 << (bits - 1)) - 1)
    return np.bitwise_count(flips).astype(np.int64)


def _phase_fidelity(cnt, s, q):
    with np.errstate(divide="ignore", invalid="ignore"):
        fid = q - np.where(cnt > 0, s * s / np.where(cnt > 0, cnt, 1.0), 0.0)
    return np.maximum(fid, 0.0)


def _enumerate_intervals(f: GridSignal, p: EnergyParams, ps: PrefixSums,
                         edges: Sequence[int], method: str) -> tuple[SegmentationResult, int]:
    """Best binary function constant on each ``[edges[j], edges[j+1])``."""
    n = f.n
    k = len(edges) - 1
    e = np.asarray(edges)
    cnt = np.diff(e).astype(float)
    sm = ps.s1[e[1:]] - ps.s1[e[:-1]]
    sq = ps.s2[e[1:]] - ps.s2[e[:-1]]
    tot_s, tot_q = float(ps.s1[-1]), float(ps.s2[-1])
    lam_dx = p.lam / n

    lo_bits = min(k, _CHUNK_BITS)
    hi_bits = k - lo_bits
    lo_cnt, lo_s, lo_q = (_subset_sums(a[:lo_bits]) for a in (cnt, sm, sq))
    lo_jumps = _internal_jumps(lo_bits)
    lo_top = (np.arange(1 << lo_bits) >> (lo_bits - 1)) & 1
    hi_cnt, hi_s, hi_q = (_subset_sums(a[lo_bits:]) for a in (cnt, sm, sq))
    hi_jumps = _internal_jumps(hi_bits)

    shortlist: list[tuple[float, int]] = []
    best = np.inf
    for h in range(1 << hi_bits):
        c1n = lo_cnt + hi_cnt[h]
        s1 = lo_s + hi_s[h]
        q1 = lo_q + hi_q[h]
        jumps = lo_jumps + hi_jumps[h]
        if hi_bits:
            jumps = jumps + (lo_top != (h & 1))
        fid = _phase_fidelity(c1n, s1, q1) + _phase_fidelity(n - c1n, tot_s - s1, tot_q - q1)
        energy = jumps + lam_dx * fid
        chunk_min = float(energy.min())
        if chunk_min > best + _SHORTLIST_ATOL:
            continue
        best = min(best, chunk_min)
        keep = np.flatnonzero(energy <= best + _SHORTLIST_ATOL)
        shortlist.extend((float(energy[i]), int(i) | (h << lo_bits)) for i in keep)
        shortlist = [t for t in shortlist if t[0] <= best + _SHORTLIST_ATOL]
    shortlist.sort()
    results = [evaluate(_decode(mask, edges, n), f, p, method) for _, mask in shortlist[:_SHORTLIST_MAX]]
    return select_best(results), 1 << k


def _decode(mask: int, edges: Sequence[int], n: int) -> BinarySegmentation:
    bits = [(mask >> j) & 1 for j in range(len(edges) - 1)]
    jumps = tuple(edges[j] for j in range(1, len(bits)) if bits[j] != bits[j - 1])
    return BinarySegmentation(n, bits[0], jumps)


def best_on_level(f: GridSignal, p: EnergyParams, cand: LevelCandidate,
                  ps: PrefixSums | None = None, cap: int = ENUMERATION_CAP) -> SegmentationResult:
    """Least-energy binary function whose jumps lie among the level's crossings."""
    _require_unit(f)
    m = len(cand.crossings)
    if m > cap:
        raise CapacityError(f"level too rich: {m} crossings")
    if ps is None:
        ps = prefix_sums(f)
    res, count = _enumerate_intervals(f, p, ps, (0, *cand.crossings, f.n), "exact")
    return replace(res, candidates=count)


def solve_piecewise_constant(f: GridSignal, p: EnergyParams, tol: float = 0.0,
                             cap: int = ENUMERATION_CAP) -> SegmentationResult:
    """Exhaustive search over binary functions with jumps inside the jump set of f."""
    _require_unit(f)
    jf = jump_set(f, tol)
    if len(jf) > cap:
        raise CapacityError(f"jump set too rich: {len(jf)} jumps")
    res, count = _enumerate_intervals(f, p, prefix_sums(f), (0, *jf, f.n), "piecewise-constant")
    return replace(res, candidates=count)


# ---------------------------------------------------------------- dynamic programming

def dp_fixed_constants(f: GridSignal, p: EnergyParams, c1: float, c2: float,
                       allowed: Sequence[int] | None = None,
                       ps: PrefixSums | None = None) -> BinarySegmentation:
    """Exact minimizer of the energy at fixed constants, jumps restricted to ``allowed``.

    Two-state shortest path over the intervals cut by ``allowed``: node cost
    is the lambda-weighted fidelity of the interval at the state's constant,
    edge cost is 1 per phase change.  ``allowed=None`` permits every
    interior boundary.  Ties prefer staying in phase, then phase 0.
    """
    n = f.n
    if allowed is None:
        allowed = range(1, n)
    edges = np.asarray([0, *allowed, n])
    if np.any(np.diff(edges) <= 0):
        raise ValueError("allowed boundaries must be sorted, distinct and interior")
    if ps is None:
        ps = prefix_sums(f)
    cnt = np.diff(edges).astype(float)
    sm = ps.s1[edges[1:]] - ps.s1[edges[:-1]]
    sq = ps.s2[edges[1:]] - ps.s2[edges[:-1]]
    lam_dx = p.lam / n
    cost1 = (lam_dx * np.maximum(cnt * c1 * c1 - 2.0 * c1 * sm + sq, 0.0)).tolist()
    cost0 = (lam_dx * np.maximum(cnt * c2 * c2 - 2.0 * c2 * sm + sq, 0.0)).tolist()

    k = len(cost0)
    # from_other[j][s]: state s at interval j was entered by a phase change
    from_other = [(False, False)] * k
    b0, b1 = cost0[0], cost1[0]
    for j in range(1, k):
        sw0 = b1 + 1.0 < b0
        sw1 = b0 + 1.0 < b1
        n0 = (b1 + 1.0 if sw0 else b0) + cost0[j]
        n1 = (b0 + 1.0 if sw1 else b1) + cost1[j]
        from_other[j] = (sw0, sw1)
        b0, b1 = n0, n1
    state = 1 if b1 < b0 else 0
    states = [0] * k
    for j in range(k - 1, -1, -1):
        states[j] = state
        if from_other[j][state]:
            state = 1 - state
    edges_l = edges.tolist()
    jumps = tuple(edges_l[j] for j in range(1, k) if states[j] != states[j - 1])
    return BinarySegmentation(n, states[0], jumps)


def refine_alternating(f: GridSignal, p: EnergyParams, u0: BinarySegmentation,
                       ps: PrefixSums | None = None, max_rounds: int = 100,
                       tol: float = 1e-12, method: str = "dp") -> SegmentationResult:
    """Alternate constant updates with the fixed-constant DP until a fixed point.

    Each round cannot increase the energy: the DP minimizes over a set that
    contains the current ``u`` and the constant update is a least-squares fit.
    """
    if ps is None:
        ps = prefix_sums(f)
    cur = evaluate(u0, f, p, method)
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        u_new = dp_fixed_constants(f, p, cur.c1, cur.c2, None, ps)
        if u_new == cur.u:
            break
        nxt = evaluate(u_new, f, p, method)
        if nxt.energy > cur.energy:
            break
        gain = cur.energy - nxt.energy
        cur = nxt
        if gain < tol:
            break
    return replace(cur, iterations=rounds)


# ---------------------------------------------------------------- level scan

def _threshold(f: GridSignal, level: float) -> BinarySegmentation:
    return BinarySegmentation.from_values((f.values > level).astype(float))


def solve_exact(f: GridSignal, p: EnergyParams, K: int = DEFAULT_LEVELS,
                threads: int | None = 1, cap: int = ENUMERATION_CAP) -> SegmentationResult:
    """Scan the level grid and return the least-energy binary candidate.

    Levels with at most ``cap`` crossings are enumerated exhaustively.  A
    level with more crossings is handled by :func:`refine_alternating`
    started from the threshold of f at that level.  The winner is polished
    by the same alternation, which never raises its energy.  The result is
    tagged ``"dp"`` only when no level could be enumerated.

    ``threads`` > 1 evaluates levels concurrently; the reduction is the
    deterministic total order, so the output does not depend on it.
    """
    _require_unit(f)
    if K < 1:
        raise ValueError("K must be positive")
    ps = prefix_sums(f)
    levels = level_grid(f, K)
    # levels between the same pair of consecutive values share crossings
    cands = list({c.crossings: c for c in (candidate(f, lv) for lv in levels)}.values())
    fallback_seen: dict = {}

    def run(c: LevelCandidate):
        if len(c.crossings) <= cap:
            return best_on_level(f, p, c, ps, cap), True
        u0 = _threshold(f, c.level)
        if u0 not in fallback_seen:
            fallback_seen[u0] = refine_alternating(f, p, u0, ps)
        return fallback_seen[u0], False

    workers = _resolve_threads(threads)
    if workers > 1 and len(cands) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, cands))
    else:
        outcomes = [run(c) for c in cands]

    enumerated = any(ok for _, ok in outcomes)
    total = sum(r.candidates for r, _ in outcomes)
    rounds = sum(r.iterations for r, _ in outcomes)
    pool_results = [r for r, _ in outcomes] + _constant_results(f, p, "exact")
    best = select_best(pool_results)
    polished = refine_alternating(f, p, best.u, ps)
    best = select_best([best, polished])
    method = "exact" if enumerated else "dp"
    return replace(best, method=method, candidates=total, iterations=rounds)


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("TVSEG_THREADS")
        if env:
            try:
                return max(1, int(env))
            except ValueError:
                pass
        return os.cpu_count() or 1
    return max(1, int(threads))


# ---------------------------------------------------------------- oracle

def brute_force(f: GridSignal, p: EnergyParams) -> SegmentationResult:
    """Minimum over all ``2**n`` binary cell assignments; for ``n <= 16``."""
    _require_unit(f)
    n = f.n
    if n > ORACLE_LIMIT:
        raise CapacityError("oracle limit exceeded")
    fv = f.values
    masks = np.arange(1 << n, dtype=np.int64)
    U = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    w1 = U.sum(axis=1)
    w0 = n - w1
    mean = fv.mean()
    with np.errstate(divide="ignore", invalid="ignore"):
        c1 = np.where(w1 > 0, U @ fv / np.where(w1 > 0, w1, 1), mean)
        c0 = np.where(w0 > 0, (1 - U) @ fv / np.where(w0 > 0, w0, 1), mean)
    fid = (U * (c1[:, None] - fv) ** 2 + (1 - U) * (c0[:, None] - fv) ** 2).sum(axis=1) / n
    jumps = np.abs(np.diff(U, axis=1)).sum(axis=1)
    energy = jumps + p.lam * fid
    keep = np.flatnonzero(energy <= energy.min() + _SHORTLIST_ATOL)
    results = [evaluate(BinarySegmentation.from_values(U[i]), f, p, "brute") for i in keep]
    return replace(select_best(results), candidates=1 << n)
