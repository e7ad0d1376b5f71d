# Events shared across domains. Payloads are plain values only.
from dataclasses import dataclass
from typing import Any


@dataclass(frozen=True)
class IterationCompletedIntegrationEvent:
    solver: str
    record: Any  # prox_qn.models.TraceRecord


@dataclass(frozen=True)
class EpochStartedIntegrationEvent:
    solver: str
    epoch: int
    shrink_tol: float


@dataclass(frozen=True)
class SolveFinishedIntegrationEvent:
    solver: str
    status: str
    objective: float
    nnz: int
    epochs: int
    iterations: int
