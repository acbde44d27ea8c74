"""Simulator of cross-Kerr QND polarization entanglement purification
for microwave photons in circuit QED."""

__version__ = "0.1.0"

from .kerr import (KerrSystemParams, PhaseShiftTable, build_phase_table,
                   chi_from_params, reference_params, validate_regime)
from .protocol import RuleSet, f_ideal, make_mixed_pair, purify_exact

__all__ = [
    "KerrSystemParams",
    "PhaseShiftTable",
    "RuleSet",
    "build_phase_table",
    "chi_from_params",
    "f_ideal",
    "make_mixed_pair",
    "purify_exact",
    "reference_params",
    "validate_regime",
]
