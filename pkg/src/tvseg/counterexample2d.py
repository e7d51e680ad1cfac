"""Closed-form energies for the square-in-square example in two dimensions.

Setting: ``Omega = [-1, 1]^2`` (area 4), ``f = chi_E`` with
``E = [-1/2, 1/2]^2`` (area 1, perimeter 4).  Three candidates:

* ``u = chi_Omega`` with ``c1 = mean(f) = 1/4``: no perimeter, fidelity
  ``lam * (1 * (3/4)**2 + 3 * (1/4)**2) = 3 lam / 4``.
* ``u = chi_E`` with ``(c1, c2) = (1, 0)``: exact fit, energy = perimeter = 4.
* ``u = chi_{E_delta}``, E with each corner replaced by a quarter circle of
  radius delta.  Each corner loses ``delta**2 - pi delta**2 / 4`` of area,
  so ``A = (4 - pi) delta**2`` of E lies outside E_delta, and

      Per(E_delta) = 4 (1 - 2 delta) + 2 pi delta
      c2 = A / (3 + A)                       (mean of f outside E_delta)
      fidelity = lam * (A (1 - c2)**2 + 3 c2**2) = 3 lam A / (3 + A)

  The energy drops below 4 exactly when ``3 delta / (3 + A) < 2 / lam``.

Functions accept :class:`fractions.Fraction` for ``lam`` where the
formula is rational, which keeps the tie at ``lam = 16/3`` exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "SquareScenario",
    "full_square_energy",
    "inner_square_energy",
    "rounded_square_energy",
    "rounded_square_c2",
    "improvement_holds",
    "summary",
]


@dataclass(frozen=True)
class SquareScenario:
    lam: float
    delta: float

    def __post_init__(self):
        if not (self.lam > 0):
            raise ValueError("lambda must be positive")
        if not (0 < self.delta < 0.5):
            raise ValueError("invalid radius")


def full_square_energy(lam):
    """Energy of ``u = chi_Omega`` with ``c1 = 1/4``: ``3 lam / 4``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return 3 * lam / 4


def inner_square_energy():
    return 4


def _corner_area(delta: float) -> float:
    return (4.0 - math.pi) * delta * delta


def rounded_square_c2(delta: float) -> float:
    a = _corner_area(delta)
    return a / (3.0 + a)


def rounded_square_energy(s: SquareScenario) -> float:
    a = _corner_area(s.delta)
    perimeter = 4.0 * (1.0 - 2.0 * s.delta) + 2.0 * math.pi * s.delta
    return perimeter + 3.0 * s.lam * a / (3.0 + a)


def improvement_holds(s: SquareScenario) -> bool:
    return 3.0 * s.delta / (3.0 + (4.0 - math.pi) * s.delta ** 2) < 2.0 / s.lam


def summary(lam, delta: float) -> dict:
    s = SquareScenario(float(lam), delta)
    full = full_square_energy(lam)
    return {
        "lambda": float(lam),
        "delta": delta,
        "full_square_energy": float(full),
        "inner_square_energy": inner_square_energy(),
        "rounded_square_energy": rounded_square_energy(s),
        "rounded_square_c2": rounded_square_c2(delta),
        "improvement_holds": improvement_holds(s),
        "full_square_ties_inner": full == inner_square_energy(),
    }
