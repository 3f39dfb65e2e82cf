"""Kronig-Penney delta lattices with Wigner-von Neumann type perturbations.

Band structure, transfer-matrix propagation, asymptotic checks, embedded
eigenvalues at critical points and finite-section gap diagnostics.
"""

from __future__ import annotations

from .asymptotics import (
    GrowthFit,
    PredictedAsymptotics,
    Tolerances,
    VerificationReport,
    extract_phase,
    fit_growth,
    measure,
    predict,
    verify,
)
from .bands import (
    BandStructure,
    band_structure,
    classify_energy,
    find_band_edges,
    find_critical_points,
    joukowsky_inv,
    lyapunov,
)
from .decomposition import OscillatoryDecomposition, decompose, remainder_series, table_beta, table_theta
from .eigensearch import (
    EmbeddedEigenvalueReport,
    kappa_star,
    l2_criterion,
    scan_critical_points,
    subordinate_solution,
)
from .errors import KPError, NumericalError, ValidationError
from .lattice import LatticeRealization, ModelParams, PerturbationKind, TailSequence, realize_lattice
from .transfer import SolutionTrace, propagate, propagate_backward, transfer_matrix
from .weyl import GapScanResult, JacobiSection, gap_scan, singular_set_scan, weyl_section

__version__ = "0.1.0"

__all__ = [
    "BandStructure", "EmbeddedEigenvalueReport", "GapScanResult", "GrowthFit", "JacobiSection",
    "KPError", "LatticeRealization", "ModelParams", "NumericalError", "OscillatoryDecomposition",
    "PerturbationKind", "PredictedAsymptotics", "SolutionTrace", "TailSequence", "Tolerances",
    "ValidationError", "VerificationReport", "band_structure", "classify_energy", "decompose",
    "extract_phase", "find_band_edges", "find_critical_points", "fit_growth", "gap_scan",
    "joukowsky_inv", "kappa_star", "l2_criterion", "lyapunov", "measure", "predict",
    "propagate", "propagate_backward", "realize_lattice", "remainder_series", "scan_critical_points",
    "singular_set_scan", "subordinate_solution", "table_beta", "table_theta", "transfer_matrix",
    "verify", "weyl_section",
]
