from enum import Enum

from pydantic import BaseModel, ConfigDict, Field

from sparse_proxqn.core.config import settings


class SolverKind(str, Enum):
    prox_qn = "prox_qn"
    prox_gd = "prox_gd"


# ========================================
# Solver Schemas
# ========================================


class SolverConfig(BaseModel):
    """
    Validated solver parameters. ``lambda`` is accepted as an alias of
    ``lam``; unset fields fall back to the ``PROXQN_*`` settings.
    """

    model_config = ConfigDict(populate_by_name=True, frozen=True, extra="forbid")

    lam: float = Field(alias="lambda", ge=0)
    epsilon: float = Field(default_factory=lambda: settings.epsilon, gt=0)
    memory: int = Field(default_factory=lambda: settings.memory, ge=1)
    beta: float = Field(default_factory=lambda: settings.beta, gt=0, lt=1)
    sigma: float = Field(default_factory=lambda: settings.sigma, gt=0, lt=1)
    max_inner: int = Field(default_factory=lambda: settings.max_inner, ge=1)
    # fixed sweep count per subproblem, replaces min(max_inner, d // |A|)
    inner_sweeps: int | None = Field(default=None, ge=1)
    max_outer: int = Field(default_factory=lambda: settings.max_outer, ge=1)
    max_trials: int = Field(default_factory=lambda: settings.max_trials, ge=1)
    cooling_factor: float = Field(default_factory=lambda: settings.cooling_factor, gt=1)
    curvature_floor: float = Field(default_factory=lambda: settings.curvature_floor, ge=0)
    shrink_enabled: bool = True
    rng_seed: int = Field(default_factory=lambda: settings.seed)
    solver_kind: SolverKind = SolverKind.prox_qn
    record_iterates: bool = False
