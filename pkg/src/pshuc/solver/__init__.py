from .backends import (
    BackendUnavailable,
    BuiltinBackend,
    HighsBackend,
    SolverHandle,
    get_solver,
    register_backend,
    reset_backend,
)
from .bnb import DEFAULT_GAP, OPERATIONAL_GAP, MipInfeasible, MipSolution, MipStatus, solve_mip
from .simplex import LpSolution, LpStatus, NumericalBreakdown, SimplexEngine, solve_lp

__all__ = [
    "BackendUnavailable",
    "BuiltinBackend",
    "DEFAULT_GAP",
    "HighsBackend",
    "LpSolution",
    "LpStatus",
    "MipInfeasible",
    "MipSolution",
    "MipStatus",
    "NumericalBreakdown",
    "OPERATIONAL_GAP",
    "SimplexEngine",
    "SolverHandle",
    "get_solver",
    "register_backend",
    "reset_backend",
    "solve_lp",
    "solve_mip",
]
