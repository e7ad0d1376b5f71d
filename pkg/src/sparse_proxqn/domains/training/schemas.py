from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, FilePath, model_validator

from sparse_proxqn.core.config import settings
from sparse_proxqn.domains.prox_qn.schemas import SolverConfig


class TaskKind(str, Enum):
    seq = "seq"
    hier = "hier"
    logistic = "logistic"


class CompareVariant(str, Enum):
    prox_qn = "prox_qn"
    prox_qn_noshrink = "prox_qn_noshrink"
    prox_gd = "prox_gd"


# ========================================
# Run Schemas
# ========================================


class SplitSpec(BaseModel):
    fraction: float = Field(gt=0, lt=1)
    seed: int = 0


class RunManifest(BaseModel):
    """
    One training run: which task, where the data lives, how to hold out a
    test part and where to write the outputs.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    task: TaskKind
    data: FilePath
    hierarchy: FilePath | None = None
    test_data: FilePath | None = None
    split: SplitSpec | None = None
    solver: SolverConfig
    solvers: list[CompareVariant] = Field(default_factory=list)
    trace_out: Path | None = None
    model_out: Path | None = None
    summary_out: Path | None = None
    compare_out: Path | None = None
    threads: int = Field(default_factory=lambda: settings.threads, ge=1)
    num_pixels: int = Field(128, ge=1)
    scale: bool = False
    # svmlight index base; None reads it off the training file
    zero_based: bool | None = None
    wall_clock: bool = True

    @model_validator(mode="after")
    def check_inputs(self) -> "RunManifest":
        if self.task == TaskKind.hier and self.hierarchy is None:
            raise ValueError("hier task needs a hierarchy file")
        if self.split is not None and self.test_data is not None:
            raise ValueError("give either a split or a test file, not both")
        return self


class EvalRequest(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    model: FilePath
    data: FilePath
    task: TaskKind | None = None
    hierarchy: FilePath | None = None
    num_pixels: int | None = Field(None, ge=1)
    scale: bool = False
    zero_based: bool | None = None
    threads: int = Field(default_factory=lambda: settings.threads, ge=1)
