from dataclasses import dataclass

from sparse_proxqn.core.events.base import SolverEvent
from sparse_proxqn.core.events.contracts import (
    EpochStartedIntegrationEvent,
    IterationCompletedIntegrationEvent,
    SolveFinishedIntegrationEvent,
)

from .models import SolveResult, TraceRecord


@dataclass(kw_only=True)
class IterationCompletedEvent(SolverEvent):
    record: TraceRecord

    def to_integration(self) -> IterationCompletedIntegrationEvent:
        return IterationCompletedIntegrationEvent(solver=self.solver, record=self.record)


@dataclass(kw_only=True)
class EpochStartedEvent(SolverEvent):
    epoch: int
    shrink_tol: float

    def to_integration(self) -> EpochStartedIntegrationEvent:
        return EpochStartedIntegrationEvent(
            solver=self.solver, epoch=self.epoch, shrink_tol=self.shrink_tol
        )


@dataclass(kw_only=True)
class SolveFinishedEvent(SolverEvent):
    result: SolveResult

    def to_integration(self) -> SolveFinishedIntegrationEvent:
        return SolveFinishedIntegrationEvent(
            solver=self.solver,
            status=self.result.status.value,
            objective=self.result.objective,
            nnz=self.result.nnz,
            epochs=self.result.epochs,
            iterations=self.result.iterations,
        )
