from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from sparse_proxqn.core.events.contracts import (
    EpochStartedIntegrationEvent,
    IterationCompletedIntegrationEvent,
    SolveFinishedIntegrationEvent,
)
from sparse_proxqn.core.events.event_bus import EventBus
from sparse_proxqn.core.logging import log_info
from sparse_proxqn.domains.prox_qn.models import TraceRecord

from .repositories import TraceCsvWriter


def announce_epoch(event: EpochStartedIntegrationEvent) -> None:
    if event.epoch > 0:
        log_info(f"{event.solver}: epoch {event.epoch}, shrink tolerance {event.shrink_tol:.2e}")


def announce_finish(event: SolveFinishedIntegrationEvent) -> None:
    log_info(
        f"{event.solver}: {event.status} after {event.iterations} iterations, "
        f"objective {event.objective:.10g}, nnz {event.nnz}"
    )


class TraceCollector:
    """Keeps every record published by one solver, in order."""

    def __init__(self, solver: str | None = None):
        self.solver = solver
        self.records: list[TraceRecord] = []

    def __call__(self, event: IterationCompletedIntegrationEvent) -> None:
        if self.solver is None or event.solver == self.solver:
            self.records.append(event.record)


@contextmanager
def trace_sink(bus: EventBus, path: Path, *, wall_clock: bool = True) -> Iterator[None]:
    """Write a trace CSV row for each iteration published while the block runs."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = TraceCsvWriter(fh, wall_clock=wall_clock)

        def handler(event: IterationCompletedIntegrationEvent) -> None:
            writer.write(event.record)

        bus.subscribe(IterationCompletedIntegrationEvent, handler)
        try:
            yield
        finally:
            bus.unsubscribe(IterationCompletedIntegrationEvent, handler)


def register_event_handlers(bus: EventBus) -> None:
    bus.subscribe(EpochStartedIntegrationEvent, announce_epoch)
    bus.subscribe(SolveFinishedIntegrationEvent, announce_finish)
