"""Steady-state quantum Fisher information of two collectively damped qubits
under homodyne-mediated feedback."""

from .dynamics import (
    build_liouvillian,
    conserved_quantities,
    evolve,
    solve_steady,
    steady_analytic_f1,
    steady_analytic_nofeedback,
    steady_state,
    trajectory,
)
from .model import ConventionRecord, ModelConfig, Scheme, prepare_initial, random_density_matrix
from .qfi import QfiReport, cramer_rao_bound, qfi_direction, qfi_report, rotate_phase
from .sweep import Axis, SweepSpec, calibrate_conventions, check_initial_independence, refine_max, run_sweep

__version__ = "0.1.0"
