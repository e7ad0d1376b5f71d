import importlib
from typing import Type, TypeVar

import punq

from sparse_proxqn.core.config import settings
from sparse_proxqn.core.events.bootstrap import register_domain_event_handlers
from sparse_proxqn.core.events.event_bus import EventBus, SimpleEventBus
from sparse_proxqn.core.logging import get_logger

log = get_logger("container")

T = TypeVar("T")


def build_container(event_bus: EventBus | None = None) -> punq.Container:
    """
    Fresh container with the event bus registered first, then every installed
    domain's ``container_registration.register``.
    """
    container = punq.Container()
    bus = event_bus if event_bus is not None else SimpleEventBus()
    container.register(EventBus, instance=bus)

    for domain in settings.installed_domains:
        try:
            mod = importlib.import_module(f"sparse_proxqn.domains.{domain}.container_registration")
        except ModuleNotFoundError:
            log.warning("domain {} has no container_registration module, skipped", domain)
            continue

        if hasattr(mod, "register"):
            mod.register(container)
        else:
            log.warning("domain {} has no register() function, skipped", domain)

    register_domain_event_handlers(bus)
    return container


def resolve(service_type: Type[T], container: punq.Container | None = None) -> T:
    return (container or build_container()).resolve(service_type)
