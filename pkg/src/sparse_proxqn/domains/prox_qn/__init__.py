from .models import SolveResult, SolveStatus, TraceRecord, WorkingSet
from .prox_gd import ProxGdSolver, prox_gd_solve, prox_gd_step
from .schemas import SolverConfig, SolverKind
from .services import (
    ProxQnSolver,
    armijo_search,
    kkt_violation,
    objective,
    partial_subgradient,
    shrink_pass,
    solve,
)

__all__ = [
    "ProxGdSolver",
    "ProxQnSolver",
    "SolveResult",
    "SolveStatus",
    "SolverConfig",
    "SolverKind",
    "TraceRecord",
    "WorkingSet",
    "armijo_search",
    "kkt_violation",
    "objective",
    "partial_subgradient",
    "prox_gd_solve",
    "prox_gd_step",
    "shrink_pass",
    "solve",
]
