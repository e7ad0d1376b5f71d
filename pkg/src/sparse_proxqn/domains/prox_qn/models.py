from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np


class SolveStatus(str, Enum):
    converged = "converged"
    max_outer = "max_outer"
    line_search_failure = "line_search_failure"
    stalled = "stalled"


@dataclass
class WorkingSet:
    """
    Active coordinates plus shrinking bookkeeping.

    ``m_hat`` is the max |partial f| of the previous pass (inf before the
    first), ``shrink_tol`` is unset until the first pass has been seen.
    """

    active: np.ndarray
    m_hat: float = float("inf")
    m_current: float = 0.0
    epoch: int = 0
    shrink_tol: float | None = None

    @classmethod
    def full(cls, dim: int) -> "WorkingSet":
        return cls(active=np.arange(dim, dtype=np.int64))

    @property
    def size(self) -> int:
        return int(self.active.size)

    def restore(self, dim: int) -> None:
        self.active = np.arange(dim, dtype=np.int64)


class ShrinkOutcome(NamedTuple):
    active: np.ndarray
    max_violation: float
    examined: np.ndarray
    gradient: np.ndarray  # aligned with ``examined``


class ArmijoStep(NamedTuple):
    alpha: float
    w: np.ndarray
    objective: float
    trials: int


@dataclass
class TraceRecord:
    iter: int
    epoch: int
    elapsed_seconds: float
    objective: float
    nnz: int
    active_set: int
    step_size: float
    inner_sweeps: int
    line_search_trials: int
    oracle_passes: int


@dataclass
class SolveResult:
    w: np.ndarray
    trace: list[TraceRecord]
    status: SolveStatus
    objective: float
    epochs: int
    max_violation: float
    iterates: list[np.ndarray] | None = None
    error: Exception | None = field(default=None, repr=False)

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.w))

    @property
    def iterations(self) -> int:
        return self.trace[-1].iter if self.trace else 0
