from .models import InnerDirection
from .services import (
    cd_step,
    inner_sweep_budget,
    model_decrease,
    soft_threshold,
    solve_subproblem,
)

__all__ = [
    "InnerDirection",
    "cd_step",
    "inner_sweep_budget",
    "model_decrease",
    "soft_threshold",
    "solve_subproblem",
]
