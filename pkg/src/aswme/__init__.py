"""Axisymmetric shallow water moment equations and their hyperbolic regularization."""

from .basis import build_coupling_tables, eval_phi, project_velocity_profile, reconstruct_profile
from .model import ModelConfig, Variant, primitives, state_from_primitives, system_matrix
from .scenarios import convergence_study, dam_break_scenario, error_norm, initial_state, smooth_scenario
from .solver import RadialGrid, SolverError, SolverParams, run
from .spectral import classify_hyperbolic, eigenvalues_dense, haswme_eigenvalues, scan_region

__version__ = "0.1.0"

__all__ = [
    "ModelConfig",
    "RadialGrid",
    "SolverError",
    "SolverParams",
    "Variant",
    "build_coupling_tables",
    "classify_hyperbolic",
    "convergence_study",
    "dam_break_scenario",
    "eigenvalues_dense",
    "error_norm",
    "eval_phi",
    "haswme_eigenvalues",
    "initial_state",
    "primitives",
    "project_velocity_profile",
    "reconstruct_profile",
    "run",
    "scan_region",
    "smooth_scenario",
    "state_from_primitives",
    "system_matrix",
]
