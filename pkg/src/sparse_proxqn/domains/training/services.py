import time
from abc import ABC, abstractmethod
from contextlib import nullcontext
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from sparse_proxqn.core.base.base_oracle import SmoothLossOracle
from sparse_proxqn.core.events.contracts import IterationCompletedIntegrationEvent
from sparse_proxqn.core.events.event_bus import EventBus
from sparse_proxqn.core.exceptions import DimensionMismatchError, ManifestError
from sparse_proxqn.core.logging import get_logger
from sparse_proxqn.domains.loss_oracles import HierOracle, LogisticOracle, SeqCrfOracle
from sparse_proxqn.domains.prox_qn.models import SolveResult, SolveStatus, TraceRecord
from sparse_proxqn.domains.prox_qn.prox_gd import ProxGdSolver
from sparse_proxqn.domains.prox_qn.schemas import SolverKind
from sparse_proxqn.domains.prox_qn.services import ProxQnSolver
from sparse_proxqn.domains.sparse_data import (
    load_ocr,
    load_svmlight_binary,
    load_svmlight_with_taxonomy,
    svmlight_zero_based,
    train_test_split,
)
from sparse_proxqn.domains.sparse_data.repositories import (
    write_hierarchy,
    write_ocr,
    write_svmlight,
)
from sparse_proxqn.domains.sparse_data.synthetic import (
    make_logistic,
    make_taxonomy,
    sample_chain_words,
)

from .event_handlers import TraceCollector, trace_sink
from .models import EvalReport, ModelFile, RunSummary
from .repositories import TraceCsvWriter, load_model, save_model, write_summary
from .schemas import CompareVariant, EvalRequest, RunManifest, TaskKind

log = get_logger("training")


# =================================
# Task adapters
# =================================
@dataclass
class LoadOptions:
    hierarchy: Path | None = None
    num_pixels: int = 128
    num_labels: int | None = None
    num_features: int | None = None
    scale: bool = False
    zero_based: bool | None = None


class TaskAdapter(ABC):
    """Loading, oracle construction and scoring for one task."""

    kind: TaskKind

    @abstractmethod
    def load(self, path: Path, options: LoadOptions): ...

    @abstractmethod
    def oracle(self, dataset, *, threads: int = 1) -> SmoothLossOracle: ...

    @abstractmethod
    def meta(self, dataset, options: LoadOptions) -> dict[str, str]:
        """Header values needed to load held-out data compatibly."""

    @abstractmethod
    def options_from(self, meta: dict[str, str], base: LoadOptions) -> LoadOptions: ...

    @abstractmethod
    def targets(self, dataset) -> np.ndarray: ...

    def resolve(self, path: Path, options: LoadOptions) -> LoadOptions:
        """Fix every load option that would otherwise be inferred from ``path``."""
        return options

    def score(self, oracle: SmoothLossOracle, dataset) -> tuple[int, int]:
        predicted = oracle.predict(dataset)
        targets = self.targets(dataset)
        return int(np.sum(predicted == targets)), int(targets.size)


class SvmlightTask(TaskAdapter):
    """
    Tasks read from svmlight files. The index base is taken from the
    training file once and then passed to every held-out load.
    """

    def resolve(self, path, options):
        if options.zero_based is None:
            options = replace(options, zero_based=svmlight_zero_based(path))
        return options

    def meta(self, dataset, options):
        meta = {"num_features": str(dataset.num_features)}
        if options.zero_based is not None:
            meta["zero_based"] = "1" if options.zero_based else "0"
        return meta

    def options_from(self, meta, base):
        num_features = meta.get("num_features")
        zero_based = meta.get("zero_based")
        return replace(
            base,
            num_features=int(num_features) if num_features is not None else None,
            zero_based=zero_based == "1" if zero_based is not None else base.zero_based,
        )


class LogisticTask(SvmlightTask):
    kind = TaskKind.logistic

    def load(self, path, options):
        return load_svmlight_binary(
            path, num_features=options.num_features, zero_based=options.zero_based
        )

    def oracle(self, dataset, *, threads=1):
        return LogisticOracle(dataset, threads=threads)

    def targets(self, dataset):
        return dataset.labels


class SeqTask(TaskAdapter):
    """Per-character accuracy under Viterbi decoding."""

    kind = TaskKind.seq

    def load(self, path, options):
        return load_ocr(path, num_pixels=options.num_pixels, num_labels=options.num_labels)

    def oracle(self, dataset, *, threads=1):
        return SeqCrfOracle(dataset, threads=threads)

    def meta(self, dataset, options):
        return {
            "num_labels": str(dataset.label_alphabet_size),
            "num_features": str(dataset.feature_index.num_features),
            "num_pixels": str(options.num_pixels),
        }

    def options_from(self, meta, base):
        return LoadOptions(
            num_pixels=int(meta.get("num_pixels", base.num_pixels)),
            num_labels=int(meta["num_labels"]) if "num_labels" in meta else None,
        )

    def targets(self, dataset):
        return dataset.labels


class HierTask(SvmlightTask):
    """Top-1 leaf accuracy."""

    kind = TaskKind.hier

    def load(self, path, options):
        if options.hierarchy is None:
            raise ManifestError("hier task needs a hierarchy file")
        return load_svmlight_with_taxonomy(
            path,
            options.hierarchy,
            num_features=options.num_features,
            zero_based=options.zero_based,
            scale=options.scale,
        )

    def oracle(self, dataset, *, threads=1):
        return HierOracle(dataset, threads=threads)

    def meta(self, dataset, options):
        return {"num_classes": str(dataset.tree.num_classes), **super().meta(dataset, options)}

    def targets(self, dataset):
        return dataset.labels


class TaskCatalog:
    def __init__(self, logistic: LogisticTask, seq: SeqTask, hier: HierTask):
        self._tasks: dict[TaskKind, TaskAdapter] = {
            TaskKind.logistic: logistic,
            TaskKind.seq: seq,
            TaskKind.hier: hier,
        }

    def get(self, kind: TaskKind) -> TaskAdapter:
        return self._tasks[TaskKind(kind)]


# =================================
# Comparison
# =================================
COMPARE_VARIANTS: dict[CompareVariant, tuple[SolverKind, bool]] = {
    CompareVariant.prox_qn: (SolverKind.prox_qn, True),
    CompareVariant.prox_qn_noshrink: (SolverKind.prox_qn, False),
    CompareVariant.prox_gd: (SolverKind.prox_gd, True),
}


@dataclass
class CompareRun:
    name: str
    result: SolveResult
    records: list[TraceRecord]


@dataclass
class CompareReport:
    runs: list[CompareRun] = field(default_factory=list)

    @property
    def best_objective(self) -> float:
        return min(run.result.objective for run in self.runs)

    def relative_difference(self, objective: float) -> float:
        best = self.best_objective
        return (objective - best) / max(abs(best), np.finfo(float).tiny)

    def passes_to_reach(self, name: str, tolerance: float) -> int | None:
        """Oracle passes used by ``name`` until its relative difference first drops to ``tolerance``."""
        run = next(r for r in self.runs if r.name == name)
        for record in run.records:
            if self.relative_difference(record.objective) <= tolerance:
                return record.oracle_passes
        return None


# =================================
# TrainingService
# =================================
class TrainingService:
    def __init__(
        self,
        event_bus: EventBus,
        prox_qn: ProxQnSolver,
        prox_gd: ProxGdSolver,
        tasks: TaskCatalog,
    ):
        self.event_bus = event_bus
        self.solvers = {SolverKind.prox_qn: prox_qn, SolverKind.prox_gd: prox_gd}
        self.tasks = tasks

    # -------------------------
    # helpers
    # -------------------------
    def _options(self, manifest: RunManifest) -> LoadOptions:
        return LoadOptions(
            hierarchy=manifest.hierarchy,
            num_pixels=manifest.num_pixels,
            scale=manifest.scale,
            zero_based=manifest.zero_based,
        )

    def _datasets(self, adapter: TaskAdapter, manifest: RunManifest):
        """Training data, held-out data or None, and the load options both were read with."""
        options = adapter.resolve(manifest.data, self._options(manifest))
        dataset = adapter.load(manifest.data, options)
        if manifest.split is not None:
            train, test = train_test_split(dataset, manifest.split.fraction, manifest.split.seed)
            return train, test, options
        if manifest.test_data is not None:
            test_options = adapter.options_from(adapter.meta(dataset, options), options)
            return dataset, adapter.load(manifest.test_data, test_options), options
        return dataset, None, options

    # -------------------------
    # run_train
    # -------------------------
    def run_train(self, manifest: RunManifest) -> RunSummary:
        adapter = self.tasks.get(manifest.task)
        train, test, options = self._datasets(adapter, manifest)
        oracle = adapter.oracle(train, threads=manifest.threads)
        solver = self.solvers[manifest.solver.solver_kind]
        log.info(
            "training {} with {} | d={} N={} lambda={}",
            manifest.task.value,
            solver.name,
            oracle.dimension,
            oracle.num_samples,
            manifest.solver.lam,
        )

        started = time.perf_counter()
        sink = (
            trace_sink(self.event_bus, manifest.trace_out, wall_clock=manifest.wall_clock)
            if manifest.trace_out is not None
            else nullcontext()
        )
        with sink:
            result = solver.solve(oracle, manifest.solver)
        wall_time = time.perf_counter() - started if manifest.wall_clock else 0.0

        oracle.model.set_weights(result.w)
        accuracy = None
        if test is not None and test.num_instances > 0:
            correct, total = adapter.score(oracle, test)
            accuracy = correct / total if total else None

        summary = RunSummary(manifest.task, solver.name, result, wall_time, accuracy)
        if manifest.model_out is not None:
            save_model(
                manifest.model_out,
                ModelFile(
                    task=manifest.task,
                    dimension=oracle.dimension,
                    lam=manifest.solver.lam,
                    weights=result.w,
                    meta=adapter.meta(train, options),
                ),
            )
        if manifest.summary_out is not None:
            write_summary(manifest.summary_out, summary.as_dict())
        if result.status == SolveStatus.line_search_failure and result.error is not None:
            raise result.error
        return summary

    # -------------------------
    # run_eval
    # -------------------------
    def run_eval(self, request: EvalRequest) -> EvalReport:
        model = load_model(request.model)
        if request.task is not None and request.task != model.task:
            raise ManifestError(
                "model was trained for another task", model_task=model.task.value, task=request.task.value
            )
        adapter = self.tasks.get(model.task)
        base = LoadOptions(
            hierarchy=request.hierarchy,
            num_pixels=request.num_pixels or 128,
            scale=request.scale,
        )
        options = adapter.options_from(model.meta, base)
        if request.num_pixels is not None:
            options.num_pixels = request.num_pixels
        if request.zero_based is not None:
            options.zero_based = request.zero_based
        options = adapter.resolve(request.data, options)
        dataset = adapter.load(request.data, options)
        oracle = adapter.oracle(dataset, threads=request.threads)
        if oracle.dimension != model.dimension:
            raise DimensionMismatchError(
                "model dimension does not match the data",
                model=model.dimension,
                data=oracle.dimension,
            )
        oracle.model.set_weights(model.weights)
        correct, total = adapter.score(oracle, dataset)
        return EvalReport(model.task, correct / total if total else 0.0, correct, total)

    # -------------------------
    # run_compare
    # -------------------------
    def run_compare(self, manifest: RunManifest) -> CompareReport:
        variants = list(manifest.solvers)
        if len(variants) < 2:
            raise ManifestError(
                "compare needs at least two solvers", solvers=[v.value for v in variants]
            )

        adapter = self.tasks.get(manifest.task)
        train, _, _ = self._datasets(adapter, manifest)
        report = CompareReport()
        for variant in variants:
            kind, shrink = COMPARE_VARIANTS[variant]
            config = manifest.solver.model_copy(update={"solver_kind": kind, "shrink_enabled": shrink})
            oracle = adapter.oracle(train, threads=manifest.threads)
            collector = TraceCollector(self.solvers[kind].name)
            self.event_bus.subscribe(IterationCompletedIntegrationEvent, collector)
            try:
                result = self.solvers[kind].solve(oracle, config)
            finally:
                self.event_bus.unsubscribe(IterationCompletedIntegrationEvent, collector)
            report.runs.append(CompareRun(variant.value, result, collector.records))

        if manifest.compare_out is not None:
            write_comparison(manifest.compare_out, report, wall_clock=manifest.wall_clock)
        return report


def write_comparison(path: Path, report: CompareReport, *, wall_clock: bool = True) -> None:
    """Aligned traces with the relative objective difference to the best final objective."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = TraceCsvWriter(
            fh, wall_clock=wall_clock, prefix=["solver"], suffix=["rel_objective_diff"]
        )
        for run in report.runs:
            for record in run.records:
                writer.write(
                    record,
                    prefix=[run.name],
                    suffix=[repr(report.relative_difference(record.objective))],
                )


# =================================
# Synthetic corpora
# =================================
def write_synthetic_corpus(
    task: TaskKind,
    directory: Path,
    *,
    seed: int = 0,
    num_instances: int | None = None,
    num_pixels: int = 5,
) -> dict[str, Path]:
    """Write a desk-scale corpus for ``task`` in the loaders' formats."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    task = TaskKind(task)
    if task == TaskKind.logistic:
        dataset, _ = make_logistic(num_instances or 200, 50, seed=seed)
        path = directory / "logistic.svm"
        write_svmlight(path, dataset.features, dataset.labels)
        return {"data": path}
    if task == TaskKind.seq:
        words = sample_chain_words(num_instances or 50, 5, 3, num_pixels, seed=seed)
        path = directory / "words.ocr"
        write_ocr(words, path)
        return {"data": path}
    dataset = make_taxonomy(num_instances or 100, 10, seed=seed)
    data_path, tree_path = directory / "hier.svm", directory / "hierarchy.txt"
    write_svmlight(data_path, dataset.features, np.asarray(dataset.tree.class_ids)[dataset.labels])
    write_hierarchy(tree_path, dataset.tree)
    return {"data": data_path, "hierarchy": tree_path}

