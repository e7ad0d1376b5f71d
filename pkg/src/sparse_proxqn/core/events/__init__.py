from .base import DomainEvent, SolverEvent
from .event_bus import EventBus, SimpleEventBus

__all__ = ["DomainEvent", "EventBus", "SimpleEventBus", "SolverEvent"]
