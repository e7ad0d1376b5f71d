from importlib import import_module
from typing import Callable

from sparse_proxqn.core.config import settings
from sparse_proxqn.core.events.event_bus import EventBus


def register_domain_event_handlers(bus: EventBus) -> None:
    """
    Call ``register_event_handlers(bus)`` of every installed domain that
    defines an ``event_handlers`` module.
    """
    for domain in settings.installed_domains:
        mod_path = f"sparse_proxqn.domains.{domain}.event_handlers"
        try:
            mod = import_module(mod_path)
        except ModuleNotFoundError:
            continue

        func: Callable[[EventBus], None] | None = getattr(mod, "register_event_handlers", None)
        if callable(func):
            func(bus)
