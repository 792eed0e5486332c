"""Stationary profiles and uphill currents of a nonlocal mean-field model.

Modules
-------
grid        staggered grids, kernel stencils, discrete convolution, profile CSV
model       parameters, mean-field roots, entropy, free energy
instanton   the kappa-instanton by relaxation, tail fit, comparison checks
macro       the macroscopic profile and current of the cubic relation
stationary  Newton / Picard solver of the half-line stationary problem
shooting    bisection on the current for a prescribed boundary value
spectral    power iteration at the instanton, sup diagnostics
dynamics    finite-volume gradient dynamics used as an independent oracle
cli         configuration, dispatch and persistence
"""
from .model import ModelParams, free_energy, mean_field_root, spinodal_threshold
from .grid import Grid, build_grid, get_kernel, kernel_weights
from .instanton import InstantonResult, compute_instanton
from .macro import MacroProfile, macro_current, macro_profile
from .stationary import SolverError, StationarySolution, antisymmetric_extend, solve_stationary
from .shooting import ShootingResult, kappa_sweep, solve_for_mu
from .spectral import build_A_kappa, compute_diagnostics, power_iteration
from .dynamics import DynamicsProblem, relax

__version__ = "0.1.0"

__all__ = [
    "ModelParams", "free_energy", "mean_field_root", "spinodal_threshold",
    "Grid", "build_grid", "get_kernel", "kernel_weights",
    "InstantonResult", "compute_instanton",
    "MacroProfile", "macro_current", "macro_profile",
    "SolverError", "StationarySolution", "antisymmetric_extend", "solve_stationary",
    "ShootingResult", "kappa_sweep", "solve_for_mu",
    "build_A_kappa", "compute_diagnostics", "power_iteration",
    "DynamicsProblem", "relax",
]
