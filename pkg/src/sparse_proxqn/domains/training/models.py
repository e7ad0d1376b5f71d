from dataclasses import dataclass, field

import numpy as np

from sparse_proxqn.domains.prox_qn.models import SolveResult

from .schemas import TaskKind


@dataclass
class ModelFile:
    """Weights on disk: header values plus the nonzero coordinates."""

    task: TaskKind
    dimension: int
    lam: float
    weights: np.ndarray
    meta: dict[str, str] = field(default_factory=dict)

    def meta_int(self, key: str) -> int | None:
        value = self.meta.get(key)
        return int(value) if value is not None else None


@dataclass
class RunSummary:
    task: TaskKind
    solver: str
    result: SolveResult
    wall_time: float
    test_accuracy: float | None = None

    def as_dict(self) -> dict[str, object]:
        out: dict[str, object] = {
            "task": self.task.value,
            "solver": self.solver,
            "status": self.result.status.value,
            "objective": repr(self.result.objective),
            "nnz": self.result.nnz,
            "dimension": self.result.w.size,
            "epochs": self.result.epochs,
            "iterations": self.result.iterations,
            "max_violation": repr(self.result.max_violation),
            "wall_time": f"{self.wall_time:.6f}",
        }
        if self.test_accuracy is not None:
            out["test_accuracy"] = f"{self.test_accuracy:.6f}"
        return out


@dataclass
class EvalReport:
    task: TaskKind
    accuracy: float
    correct: int
    total: int
