"""PD-GMRES: restarted GMRES with a PD-controlled restart parameter, and a
quadtree-based tuner for the controller's parameters."""

__version__ = "0.1.0"

from .controller import PRESETS, PdParams, pdgmres_solve, preset
from .errors import (
    DimensionError,
    DivergenceError,
    FactorizationError,
    HeuristicUndefinedError,
    MatrixMarketError,
    PdGmresError,
)
from .krylov import SolveTrace, gmres_cycle, gmres_restarted
from .matio import SparseMatrix, parse_matrix_market, read_matrix_market, write_matrix_market
from .precond import ilu0_factor
from .quadtree import ParamDomain, QuadtreeResult
from .runtime_model import PENALTY, RuntimeModel, ToleranceWindow, averaged_heuristic, objective
from .tuner import TuningConfig, run_procedure

__all__ = [
    "PENALTY",
    "PRESETS",
    "DimensionError",
    "DivergenceError",
    "FactorizationError",
    "HeuristicUndefinedError",
    "MatrixMarketError",
    "ParamDomain",
    "PdGmresError",
    "PdParams",
    "QuadtreeResult",
    "RuntimeModel",
    "SolveTrace",
    "SparseMatrix",
    "ToleranceWindow",
    "TuningConfig",
    "__version__",
    "averaged_heuristic",
    "gmres_cycle",
    "gmres_restarted",
    "ilu0_factor",
    "objective",
    "parse_matrix_market",
    "pdgmres_solve",
    "preset",
    "read_matrix_market",
    "run_procedure",
    "write_matrix_market",
]
