"""Exact one-dimensional two-phase Chan-Vese segmentation."""
from .certificate import CertificateReport, certify, certify_segmentation
from .energy import (
    BinarySegmentation,
    EnergyParams,
    chan_vese_energy,
    feps_energy,
    optimal_constants,
    relaxed_energy,
    total_variation,
    truncate,
)
from .levelset import crossings, jump_set, level_grid
from .signal import GeneratorSpec, GridSignal, SignalError, generate, normalize_to_unit
from .solver_exact import (
    CapacityError,
    SegmentationResult,
    brute_force,
    solve_exact,
    solve_piecewise_constant,
)
from .solver_gd import GdOptions, minimize_feps, solve_gd

__version__ = "0.1.0"

__all__ = [
    "BinarySegmentation",
    "CapacityError",
    "CertificateReport",
    "EnergyParams",
    "GdOptions",
    "GeneratorSpec",
    "GridSignal",
    "SegmentationResult",
    "SignalError",
    "brute_force",
    "certify",
    "certify_segmentation",
    "chan_vese_energy",
    "crossings",
    "feps_energy",
    "generate",
    "jump_set",
    "level_grid",
    "minimize_feps",
    "normalize_to_unit",
    "optimal_constants",
    "relaxed_energy",
    "solve_exact",
    "solve_gd",
    "solve_piecewise_constant",
    "total_variation",
    "truncate",
]
