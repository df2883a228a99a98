"""Fourier-series optimal control surfaces for controlled Bass diffusion.

The library builds cosine-series approximations u(t, x0) of the optimal
maintenance effort for a family of initial market shares, simulates the
controlled dynamics under additive dynamics noise or a noisy observer,
and validates the result against independent direct-transcription and
first-order-optimality baselines.
"""

from .model import BassParams, ModelParams, ReplicatorParams, bass_rhs, \
    controlled_rhs, replicator_rhs
from .simulate import NoisePath, TimeGrid, Trajectory, integrate_deterministic, \
    integrate_sde, observe, sample_noise, trajectory_to_csv
from .fourier import BasisTables, FourierSurface, basis_matrix, \
    coefficients_to_json, load_coefficients, save_coefficients
from .objective import ObjectiveValue, X0Grid, mc_report, \
    nonnegativity_violation, objective_aggregate, objective_deterministic, \
    objective_stochastic_mc, superposition_discrepancy
from .optimize import OptimizerConfig, SolveReport, gradient_fd, \
    gradient_sensitivity, solve
from .baseline import TranscriptionSolution, pmp_residual, \
    solve_transcription, transcription_objective

__all__ = [
    "BassParams", "ModelParams", "ReplicatorParams",
    "bass_rhs", "controlled_rhs", "replicator_rhs",
    "NoisePath", "TimeGrid", "Trajectory",
    "integrate_deterministic", "integrate_sde", "observe", "sample_noise",
    "trajectory_to_csv",
    "BasisTables", "FourierSurface", "basis_matrix",
    "coefficients_to_json", "load_coefficients", "save_coefficients",
    "ObjectiveValue", "X0Grid", "mc_report", "nonnegativity_violation",
    "objective_aggregate", "objective_deterministic", "objective_stochastic_mc",
    "superposition_discrepancy",
    "OptimizerConfig", "SolveReport", "gradient_fd", "gradient_sensitivity",
    "solve",
    "TranscriptionSolution", "pmp_residual", "solve_transcription",
    "transcription_objective",
]

__version__ = "0.1.0"
