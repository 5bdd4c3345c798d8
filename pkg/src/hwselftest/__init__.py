"""Numerical verification of the Heisenberg-Weyl generalized CHSH self-test."""

__version__ = "0.1.0"

from .zmod import PrimeDim, FieldElem, inv, legendre, canonical_nu
from .nuspec import CubicNu, QutritPhases, default_nu
from .hw_algebra import (PhaseIndex, shift_x, clock_z, displacement, fourier, magic_unitary,
                         bell_state, rotated_bell_state, char_function, char_closed_form)
from .bell_op import (g_coeff, build_bell, build_full_bell_from_chi, sopo_ops, sopo_residual,
                      folding_check, qutrit_phase_solve)
from .strategy import (Strategy, NoiseSpec, ideal_strategy, bell_value, perturb, residuals,
                       qutrit_q_elements)
from .lhv import Assignment, LhvCertificate, lhv_value, lhv_bound
from .selftest import build_isometry, extract, theorem_bound

__all__ = [
    "PrimeDim", "FieldElem", "inv", "legendre", "canonical_nu",
    "CubicNu", "QutritPhases", "default_nu",
    "PhaseIndex", "shift_x", "clock_z", "displacement", "fourier", "magic_unitary",
    "bell_state", "rotated_bell_state", "char_function", "char_closed_form",
    "g_coeff", "build_bell", "build_full_bell_from_chi", "sopo_ops", "sopo_residual",
    "folding_check", "qutrit_phase_solve",
    "Strategy", "NoiseSpec", "ideal_strategy", "bell_value", "perturb", "residuals",
    "qutrit_q_elements",
    "Assignment", "LhvCertificate", "lhv_value", "lhv_bound",
    "build_isometry", "extract", "theorem_bound",
]
