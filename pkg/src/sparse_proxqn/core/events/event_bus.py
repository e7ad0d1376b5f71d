from collections import defaultdict
from typing import Any, Callable, Dict, List, Type


EventHandler = Callable[[Any], None]


class EventBus:
    """
    EventBus interface
    """

    def subscribe(self, event_type: Type, handler: EventHandler) -> None:
        raise NotImplementedError

    def unsubscribe(self, event_type: Type, handler: EventHandler) -> None:
        raise NotImplementedError

    def publish(self, event: Any, *, raise_on_error: bool = True) -> None:
        raise NotImplementedError


class SimpleEventBus(EventBus):
    """
    In-memory, synchronous implementation of EventBus.
    Handlers run in subscription order on the publishing thread.
    """

    def __init__(self):
        self._handlers: Dict[Type, List[EventHandler]] = defaultdict(list)

    def subscribe(self, event_type: Type, handler: EventHandler) -> None:
        self._handlers[event_type].append(handler)

    def unsubscribe(self, event_type: Type, handler: EventHandler) -> None:
        handlers = self._handlers.get(event_type, [])
        if handler in handlers:
            handlers.remove(handler)

    def publish(self, event: Any, *, raise_on_error: bool = True) -> None:
        handlers = list(self._handlers.get(type(event), []))
        errors: list[Exception] = []

        for h in handlers:
            try:
                h(event)
            except Exception as e:
                errors.append(e)
                if raise_on_error:
                    break
        if errors and raise_on_error:
            raise errors[0]
