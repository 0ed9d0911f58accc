"""Space-time random feature solvers for linear evolution equations.

Random feature models on a space-time partition of unity, fitted by
collocation least squares either over the whole time horizon at once or
block by block in time, plus tools to study how errors propagate between
time blocks.
"""
from .analysis import (ErrorReport, EigenReport, convergence_sweep, eigen_report, error_report,
                       flatness_ratio, growth_fit, propagation_matrices, unique_eigenvalue_count)
from .assembly import LSSystem, assemble_blocks, assemble_strfm, compute_B
from .config import ConfigError, RunConfig, get_preset, list_presets, preset_names
from .estimator import SpaceTimeRFM
from .features import DerivativeIndex, FeatureBank, FeatureKind, draw_bank
from .geometry import Box, Composite, decompose, sample_collocation
from .partition import PoUKind
from .problems import CATALOG, ProblemSpec, get_problem
from .solve import (DivergenceError, MarchReport, Solution, SolveReport, evaluate, lstsq,
                    solve_block_marching, solve_strfm)

__version__ = "0.1.0"

__all__ = [
    "Box", "CATALOG", "Composite", "ConfigError", "DerivativeIndex", "DivergenceError", "EigenReport",
    "ErrorReport", "FeatureBank", "FeatureKind", "LSSystem", "MarchReport", "PoUKind", "ProblemSpec",
    "RunConfig", "Solution", "SolveReport", "SpaceTimeRFM", "assemble_blocks", "assemble_strfm",
    "compute_B", "convergence_sweep", "decompose", "draw_bank", "eigen_report", "error_report",
    "evaluate", "flatness_ratio", "get_preset", "get_problem", "growth_fit", "list_presets", "lstsq",
    "preset_names", "propagation_matrices", "sample_collocation", "solve_block_marching", "solve_strfm",
    "unique_eigenvalue_count",
]
