"""Gradient-descent baselines: alternating Chan-Vese with ADAGRAD, and F_eps descent.

Both work on the relaxed problem over ``u in [0, 1]^n``; iterates are
projected back onto the box after every step.  ADAGRAD steps use the total
variation smoothed to ``sum sqrt(diff(u)**2 + s**2)`` so that a gradient
exists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .energy import (
    BinarySegmentation,
    EnergyParams,
    feps_energy,
    optimal_constants,
    relaxed_energy,
)
from .signal import GridSignal, SplitMix64
from .solver_exact import SegmentationResult, evaluate
from .tvprox import tv_denoise_weighted

__all__ = [
    "GdOptions",
    "Adagrad",
    "FepsResult",
    "smoothed_tv",
    "smoothed_tv_grad",
    "smoothed_relaxed_energy",
    "smoothed_relaxed_grad",
    "solve_gd",
    "minimize_feps",
]


@dataclass(frozen=True)
class GdOptions:
    max_outer: int = 50
    max_inner: int = 200
    base_rate: float = 0.1
    smoothing: float = 1e-3
    seed: int = 0
    tol: float = 1e-10

    def __post_init__(self):
        if self.max_outer < 1 or self.max_inner < 1:
            raise ValueError("iteration budgets must be positive")
        if not (self.base_rate > 0 and self.tol > 0):
            raise ValueError("base_rate and tol must be positive")
        if self.smoothing < 0:
            raise ValueError("smoothing must be nonnegative")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")


class Adagrad:
    """Per-coordinate ADAGRAD: ``x -= rate * g / sqrt(G + eps)`` with ``G += g**2``."""

    def __init__(self, size: int, rate: float, eps: float = 1e-8):
        self.rate = rate
        self.eps = eps
        self.acc = np.zeros(size)

    def step(self, x: np.ndarray, g: np.ndarray) -> np.ndarray:
        self.acc += g * g
        return x - self.rate * g / np.sqrt(self.acc + self.eps)


def smoothed_tv(w: np.ndarray, s: float) -> float:
    d = np.diff(w)
    return float(np.sum(np.sqrt(d * d + s * s)))


def smoothed_tv_grad(w: np.ndarray, s: float) -> np.ndarray:
    d = np.diff(w)
    r = np.sqrt(d * d + s * s)
    q = np.divide(d, r, out=np.zeros_like(d), where=r > 0)
    g = np.zeros_like(w)
    g[:-1] -= q
    g[1:] += q
    return g


def _fidelity_weights(c1, c2, fv):
    return (c1 - fv) ** 2 - (c2 - fv) ** 2


def smoothed_relaxed_energy(u: np.ndarray, c1: float, c2: float, f: GridSignal,
                            p: EnergyParams, s: float) -> float:
    fv = f.values
    fid = np.sum(u * (c1 - fv) ** 2 + (1 - u) * (c2 - fv) ** 2) / f.n
    return smoothed_tv(u, s) + p.lam * float(fid)


def smoothed_relaxed_grad(u: np.ndarray, c1: float, c2: float, f: GridSignal,
                          p: EnergyParams, s: float) -> np.ndarray:
    return smoothed_tv_grad(u, s) + (p.lam / f.n) * _fidelity_weights(c1, c2, f.values)


def _initial_u(f: GridSignal, seed: int) -> np.ndarray:
    med = np.median(f.values)
    u = (f.values > med).astype(float)
    if not u.any():
        # many cells sit at the median (e.g. the top level of a step signal)
        u = (f.values >= med).astype(float)
    if seed:
        rng = SplitMix64(seed)
        jitter = np.array([rng.uniform() for _ in range(f.n)]) - 0.5
        u = np.clip(u + 0.1 * jitter, 0.0, 1.0)
    return u


def _binarize(u: np.ndarray) -> BinarySegmentation:
    return BinarySegmentation.from_values((u >= 0.5).astype(float))


def solve_gd(f: GridSignal, p: EnergyParams, opts: GdOptions = GdOptions()) -> SegmentationResult:
    """Alternating Chan-Vese: mean updates, then ADAGRAD descent on u.

    Each outer round recomputes the constants from the current relaxed u
    and takes ``max_inner`` projected ADAGRAD steps.  The reported u is the
    0.5-threshold of the best round, scored with its own optimal constants;
    ``relaxed_energy`` holds that round's pre-threshold relaxed energy and
    ``history`` the best binary energy after each round.
    """
    if not f.is_unit():
        raise ValueError("signal must lie in [0, 1]; normalize it first")
    s = opts.smoothing
    lam_dx = p.lam / f.n
    u = _initial_u(f, opts.seed)
    best = evaluate(_binarize(u), f, p, "gd")
    c1, c2 = optimal_constants(u, f)
    best = replace(best, relaxed_energy=relaxed_energy(u, c1, c2, f, p))
    history = []
    opt = Adagrad(f.n, opts.base_rate)
    prev = math.inf
    outer = 0
    for outer in range(1, opts.max_outer + 1):
        c1, c2 = optimal_constants(u, f)
        weights = lam_dx * _fidelity_weights(c1, c2, f.values)
        for _ in range(opts.max_inner):
            g = smoothed_tv_grad(u, s) + weights
            u = np.clip(opt.step(u, g), 0.0, 1.0)
        e_relax = relaxed_energy(u, c1, c2, f, p)
        cand = evaluate(_binarize(u), f, p, "gd")
        if cand.energy < best.energy:
            best = replace(cand, relaxed_energy=e_relax)
        history.append(best.energy)
        if abs(prev - e_relax) < opts.tol:
            break
        prev = e_relax
    return replace(best, iterations=outer * opts.max_inner, history=tuple(history))


@dataclass(frozen=True, eq=False)
class FepsResult:
    u: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    energy: float
    history: tuple = field(default=())

    def binary(self) -> BinarySegmentation:
        return _binarize(self.u)


def minimize_feps(f: GridSignal, p: EnergyParams, opts: GdOptions = GdOptions(),
                  u_block: str = "prox") -> FepsResult:
    """Block-coordinate descent on the discretized F_eps.

    Each outer round updates u against the current fields, then replaces
    each field by the exact minimizer of its block,

        v1 <- argmin (1/eps) TV(v1) + (lam/n) sum u (v1 - f)**2
        v2 <- argmin (1/eps) TV(v2) + (lam/n) sum (1 - u) (v2 - f)**2,

    computed by weighted TV denoising (no constancy is assumed; the values
    stay in [0, 1] because f does).

    The u-block minimizes ``TV(u) + sum w u`` over the box, a convex
    problem for fixed fields.  With ``u_block="prox"`` (default) it takes
    up to ``max_inner`` proximal-gradient steps of unit length, each an
    exact TV prox followed by clipping; ``"adagrad"`` instead takes
    ``max_inner`` ADAGRAD steps on the smoothed TV as in :func:`solve_gd`.

    Starts from the median threshold of f with constant phase means and
    returns the lowest-energy iterate.  Finally u is thresholded at 0.5 if
    that does not raise the energy: for fixed fields every superlevel set
    of a minimizer is again a minimizer (coarea formula).
    """
    if not f.is_unit():
        raise ValueError("signal must lie in [0, 1]; normalize it first")
    if u_block not in ("prox", "adagrad"):
        raise ValueError(f"unknown u_block {u_block!r}")
    s = opts.smoothing
    fv = f.values
    n = f.n
    lam_dx = p.lam / n
    inv_eps = 1.0 / p.epsilon
    ones = np.ones(n)

    u = _initial_u(f, opts.seed)
    c1, c2 = optimal_constants(u, f)
    v1 = np.full(n, c1)
    v2 = np.full(n, c2)
    opt_u = Adagrad(n, opts.base_rate)

    best = FepsResult(u.copy(), v1.copy(), v2.copy(), feps_energy(u, v1, v2, f, p))
    history = []
    prev = math.inf
    for _ in range(opts.max_outer):
        weights = lam_dx * _fidelity_weights(v1, v2, fv)
        for _ in range(opts.max_inner):
            if u_block == "prox":
                nxt = np.clip(tv_denoise_weighted(u - weights, ones, 1.0), 0.0, 1.0)
                done = np.max(np.abs(nxt - u)) <= 1e-14
                u = nxt
                if done:
                    break
            else:
                u = np.clip(opt_u.step(u, smoothed_tv_grad(u, s) + weights), 0.0, 1.0)
        v1 = _field_block(fv, 2.0 * lam_dx * u, inv_eps, v1)
        v2 = _field_block(fv, 2.0 * lam_dx * (1.0 - u), inv_eps, v2)
        energy = feps_energy(u, v1, v2, f, p)
        if energy < best.energy:
            best = FepsResult(u.copy(), v1.copy(), v2.copy(), energy)
        history.append(best.energy)
        if abs(prev - energy) < opts.tol:
            break
        prev = energy
    ub = (best.u >= 0.5).astype(float)
    eb = feps_energy(ub, best.v1, best.v2, f, p)
    if eb <= best.energy * (1 + 1e-12) + 1e-15:
        best = FepsResult(ub, best.v1, best.v2, min(eb, best.energy))
    return FepsResult(best.u, best.v1, best.v2, best.energy, tuple(history))


def _field_block(fv: np.ndarray, w: np.ndarray, mu: float, current: np.ndarray) -> np.ndarray:
    if not np.any(w > 0):
        # the field does not enter the energy; keep it
        return current
    return np.clip(tv_denoise_weighted(fv, w, mu), 0.0, 1.0)
