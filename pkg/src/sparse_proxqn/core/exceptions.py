"""Error hierarchy. Every error carries a readable ``detail`` and context."""

from typing import Any


class ProxQnError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def __str__(self) -> str:
        extras = ", ".join(f"{k}={v}" for k, v in self.context.items() if v is not None)
        if not extras:
            return self.detail
        return f"{self.detail} ({extras})"


# --- Input errors (exit 2) ---


class InputError(ProxQnError):
    exit_code = 2


class DataFormatError(InputError):
    def __init__(
        self,
        detail: str,
        *,
        path: Any = None,
        line_number: int | None = None,
        **context: Any,
    ):
        super().__init__(detail, path=path, line_number=line_number, **context)
        self.path = path
        self.line_number = line_number


class LabelError(InputError):
    pass


class HierarchyError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class ManifestError(InputError):
    pass


# --- Solver / oracle errors (exit 1) ---


class StaleStatisticsError(ProxQnError):
    pass


class LineSearchError(ProxQnError):
    def __init__(self, detail: str, *, delta: float, last_objective: float, trials: int):
        super().__init__(
            detail, delta=delta, last_objective=last_objective, trials=trials
        )
        self.delta = delta
        self.last_objective = last_objective
        self.trials = trials


class DivergenceError(ProxQnError):
    pass


class InstanceTooLargeError(ProxQnError):
    pass
