"""Dual-field certificates for binary two-phase segmentations.

For a binary ``u`` with constants ``(c1, c2)`` the optimality system asks
for a field ``z`` on the boundaries ``0..n`` with

* ``z[0] = z[n] = 0`` and ``|z| <= 1``,
* ``z = +1`` at every upward jump of u and ``z = -1`` at every downward jump,
* per cell ``z[i+1] - z[i] = lam*dx*((c1 - f[i])**2 - (c2 - f[i])**2) + g[i]*dx``
  with ``g[i] >= 0`` where ``u = 1`` and ``g[i] <= 0`` where ``u = 0``.

The slack ``g`` only makes each increment one-sided, so the set of
reachable ``z`` values is an interval that can be propagated left to
right.  A candidate for which no such field exists is refuted (it cannot
be a minimizer); passing is necessary for optimality, not sufficient.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import BinarySegmentation, EnergyParams
from .signal import GridSignal

__all__ = ["CertificateReport", "certify", "certify_segmentation", "check_jump_signs", "SLACK"]

SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class CertificateReport:
    feasible: bool
    z_lo: np.ndarray
    z_hi: np.ndarray
    anchors: tuple = ()
    first_violation: tuple | None = None
    level_check: bool = True
    level_misses: tuple = field(default=())

    def to_dict(self) -> dict:
        out = {
            "feasible": self.feasible,
            "level_check": self.level_check,
            "anchors": [[k, s] for k, s in self.anchors],
            "z_lo": [float(x) for x in self.z_lo],
            "z_hi": [float(x) for x in self.z_hi],
            "first_violation": None,
        }
        if self.first_violation is not None:
            k, reason = self.first_violation
            out["first_violation"] = {"boundary": k, "reason": reason}
        return out


def certify_segmentation(u: BinarySegmentation, c1: float, c2: float,
                         f: GridSignal, p: EnergyParams) -> CertificateReport:
    if u.n != f.n:
        raise ValueError("grid mismatch")
    n = f.n
    fv = f.values
    uv = u.values()
    incr = (p.lam / n) * ((c1 - fv) ** 2 - (c2 - fv) ** 2)
    anchor_at = dict(zip(u.jumps, u.jump_directions()))

    lo = np.zeros(n + 1)
    hi = np.zeros(n + 1)
    violation = None
    cur_lo = cur_hi = 0.0
    for i in range(n):
        if uv[i] == 1.0:
            nlo, nhi = cur_lo + incr[i], 1.0
        else:
            nlo, nhi = -1.0, cur_hi + incr[i]
        nlo, nhi = max(nlo, -1.0), min(nhi, 1.0)
        k = i + 1
        if nlo > nhi + SLACK:
            violation = (k, "band-empty")
            break
        target = 0.0 if k == n else anchor_at.get(k)
        if target is not None:
            if not (nlo - SLACK <= target <= nhi + SLACK):
                violation = (k, "anchor-miss")
                break
            nlo = nhi = target
        lo[k], hi[k] = nlo, nhi
        cur_lo, cur_hi = nlo, nhi
    if violation is not None:
        k = violation[0]
        lo[k:], hi[k:] = np.nan, np.nan

    level = 0.5 * (c1 + c2)
    misses = []
    for k in u.jumps:
        a, b = fv[k - 1], fv[k]
        if not (min(a, b) - SLACK <= level <= max(a, b) + SLACK):
            misses.append(k)
    if misses:
        violation = (misses[0], "level-miss")
    return CertificateReport(
        feasible=violation is None,
        z_lo=lo,
        z_hi=hi,
        anchors=tuple(anchor_at.items()),
        first_violation=violation,
        level_check=not misses,
        level_misses=tuple(misses),
    )


def certify(result, f: GridSignal, p: EnergyParams) -> CertificateReport:
    """Check the optimality system for a solver result.

    ``result`` needs ``u``, ``c1`` and ``c2`` attributes; ``u`` must be a
    :class:`BinarySegmentation`.
    """
    u = result.u
    if not isinstance(u, BinarySegmentation):
        arr = np.asarray(u, dtype=float)
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("certificate requires binary candidate")
        u = BinarySegmentation.from_values(arr)
    return certify_segmentation(u, result.c1, result.c2, f, p)


def check_jump_signs(u: BinarySegmentation, report: CertificateReport) -> bool:
    """True iff the report anchors +1 at upward and -1 at downward jumps."""
    expected = dict(zip(u.jumps, u.jump_directions()))
    return dict(report.anchors) == expected
