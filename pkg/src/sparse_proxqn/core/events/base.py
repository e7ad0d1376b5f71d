from dataclasses import dataclass, field
from datetime import datetime, timezone
from itertools import count
from typing import Any

_sequence = count(1)


@dataclass(kw_only=True)
class DomainEvent:
    """
    Base type for events raised inside a domain. ``to_integration`` maps an
    event to the plain contract that is published on the bus.
    """

    sequence: int = field(default_factory=lambda: next(_sequence))
    occurred_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    @property
    def name(self) -> str:
        return self.__class__.__name__

    def to_integration(self) -> Any:
        raise NotImplementedError(f"{self.name} has no integration contract")


@dataclass(kw_only=True)
class SolverEvent(DomainEvent):
    solver: str
