from .models import EvalReport, ModelFile, RunSummary
from .repositories import load_model, read_trace, save_model, write_summary, write_trace
from .schemas import CompareVariant, EvalRequest, RunManifest, SplitSpec, TaskKind
from .services import CompareReport, TrainingService, write_synthetic_corpus

__all__ = [
    "CompareReport",
    "CompareVariant",
    "EvalReport",
    "EvalRequest",
    "ModelFile",
    "RunManifest",
    "RunSummary",
    "SplitSpec",
    "TaskKind",
    "TrainingService",
    "load_model",
    "read_trace",
    "save_model",
    "write_summary",
    "write_synthetic_corpus",
    "write_trace",
]
