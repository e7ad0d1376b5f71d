import io

import numpy as np
import pytest
from pydantic import ValidationError

from sparse_proxqn.core.containers import build_container
from sparse_proxqn.core.events.contracts import IterationCompletedIntegrationEvent
from sparse_proxqn.core.events.event_bus import SimpleEventBus
from sparse_proxqn.core.exceptions import DataFormatError, DimensionMismatchError, ManifestError
from sparse_proxqn.domains.prox_qn.models import SolveResult, SolveStatus, TraceRecord
from sparse_proxqn.domains.prox_qn.schemas import SolverConfig, SolverKind
from sparse_proxqn.domains.training import (
    CompareVariant,
    EvalRequest,
    ModelFile,
    RunManifest,
    SplitSpec,
    TaskKind,
    TrainingService,
    load_model,
    read_trace,
    save_model,
    write_synthetic_corpus,
)
from sparse_proxqn.domains.training.event_handlers import TraceCollector, trace_sink
from sparse_proxqn.domains.training.repositories import TRACE_HEADER, TraceCsvWriter, read_summary
from sparse_proxqn.domains.training.services import (
    CompareReport,
    CompareRun,
    LoadOptions,
    LogisticTask,
)


def _record(iteration, objective, passes):
    return TraceRecord(
        iter=iteration,
        epoch=0,
        elapsed_seconds=0.5,
        objective=objective,
        nnz=1,
        active_set=3,
        step_size=1.0,
        inner_sweeps=1,
        line_search_trials=1,
        oracle_passes=passes,
    )


def _config(lam, **overrides):
    return SolverConfig(lam=lam, epsilon=1e-4, max_outer=500, **overrides)


@pytest.fixture
def service():
    return build_container().resolve(TrainingService)


@pytest.fixture
def logistic_corpus(tmp_path):
    return write_synthetic_corpus(TaskKind.logistic, tmp_path / "data", seed=1, num_instances=80)


@pytest.fixture
def seq_corpus(tmp_path):
    return write_synthetic_corpus(
        TaskKind.seq, tmp_path / "data", seed=2, num_instances=20, num_pixels=5
    )


# =================================
# Container
# =================================
class TestContainer:
    def test_service_wired_with_shared_bus(self, service):
        assert isinstance(service, TrainingService)
        assert service.solvers[SolverKind.prox_qn].event_bus is service.event_bus
        assert service.solvers[SolverKind.prox_gd].event_bus is service.event_bus

    def test_catalog_covers_every_task(self, service):
        for kind in TaskKind:
            assert service.tasks.get(kind).kind == kind


# =================================
# Manifests
# =================================
class TestRunManifest:
    def test_hier_needs_hierarchy(self, logistic_corpus):
        with pytest.raises(ValidationError):
            RunManifest(task=TaskKind.hier, data=logistic_corpus["data"], solver=_config(1.0))

    def test_split_and_test_file_exclusive(self, logistic_corpus):
        with pytest.raises(ValidationError):
            RunManifest(
                task=TaskKind.logistic,
                data=logistic_corpus["data"],
                test_data=logistic_corpus["data"],
                split=SplitSpec(fraction=0.5),
                solver=_config(1.0),
            )

    @pytest.mark.parametrize("fraction", [0.0, 1.0, 1.5])
    def test_split_fraction_range(self, fraction):
        with pytest.raises(ValidationError):
            SplitSpec(fraction=fraction)

    def test_missing_data_file(self, tmp_path):
        with pytest.raises(ValidationError):
            RunManifest(task=TaskKind.logistic, data=tmp_path / "absent.svm", solver=_config(1.0))

    def test_unknown_field_rejected(self, logistic_corpus):
        with pytest.raises(ValidationError):
            RunManifest(
                task=TaskKind.logistic, data=logistic_corpus["data"], solver=_config(1.0), extra=1
            )

    def test_negative_lambda_rejected(self):
        with pytest.raises(ValidationError):
            SolverConfig(lam=-0.1)


# =================================
# run_train / run_eval
# =================================
class TestRunTrain:
    def test_writes_trace_model_and_summary(self, service, logistic_corpus, tmp_path):
        out = tmp_path / "out"
        manifest = RunManifest(
            task=TaskKind.logistic,
            data=logistic_corpus["data"],
            split=SplitSpec(fraction=0.75, seed=3),
            solver=_config(1.0),
            trace_out=out / "trace.csv",
            model_out=out / "model.txt",
            summary_out=out / "summary.txt",
            wall_clock=False,
        )
        summary = service.run_train(manifest)

        assert summary.result.status == SolveStatus.converged
        assert summary.test_accuracy is not None
        assert 0.0 <= summary.test_accuracy <= 1.0

        rows = read_trace(manifest.trace_out)
        assert list(rows[0]) == TRACE_HEADER
        assert len(rows) == len(summary.result.trace)
        assert rows[0]["iter"] == "0"
        assert {row["time_sec"] for row in rows} == {"0"}
        assert float(rows[-1]["objective"]) == summary.result.objective

        model = load_model(manifest.model_out)
        assert model.task == TaskKind.logistic
        assert model.dimension == 50
        np.testing.assert_array_equal(model.weights, summary.result.w)

        values = read_summary(manifest.summary_out)
        assert values["status"] == "converged"
        assert values["wall_time"] == "0.000000"
        assert int(values["nnz"]) == summary.result.nnz

    def test_huge_lambda_gives_empty_model(self, service, logistic_corpus, tmp_path):
        model_out = tmp_path / "zero.txt"
        manifest = RunManifest(
            task=TaskKind.logistic,
            data=logistic_corpus["data"],
            solver=_config(1e6),
            model_out=model_out,
        )
        summary = service.run_train(manifest)
        assert summary.result.nnz == 0
        lines = model_out.read_text(encoding="utf-8").splitlines()
        assert lines
        assert all(line.startswith("#") for line in lines)
        assert not load_model(model_out).weights.any()

    def test_taxonomy_task(self, service, tmp_path):
        corpus = write_synthetic_corpus(TaskKind.hier, tmp_path / "hier", seed=4, num_instances=40)
        manifest = RunManifest(
            task=TaskKind.hier,
            data=corpus["data"],
            hierarchy=corpus["hierarchy"],
            split=SplitSpec(fraction=0.5),
            solver=_config(0.5),
        )
        summary = service.run_train(manifest)
        # default synthetic tree: branching 3, depth 2
        assert summary.result.w.size % 13 == 0
        assert summary.test_accuracy is not None

    def test_events_reach_bus_subscribers(self, service, logistic_corpus):
        collector = TraceCollector(SolverKind.prox_gd.value)
        service.event_bus.subscribe(IterationCompletedIntegrationEvent, collector)
        manifest = RunManifest(
            task=TaskKind.logistic,
            data=logistic_corpus["data"],
            solver=_config(5.0, solver_kind=SolverKind.prox_gd),
        )
        summary = service.run_train(manifest)
        assert summary.solver == "prox_gd"
        assert collector.records == summary.result.trace


class TestRunEval:
    def test_sequence_model_roundtrip(self, service, seq_corpus, tmp_path):
        model_out = tmp_path / "seq.txt"
        service.run_train(
            RunManifest(
                task=TaskKind.seq,
                data=seq_corpus["data"],
                solver=_config(0.5),
                model_out=model_out,
                num_pixels=5,
            )
        )
        report = service.run_eval(EvalRequest(model=model_out, data=seq_corpus["data"]))
        assert report.task == TaskKind.seq
        assert report.total == 20 * 5
        assert report.correct == round(report.accuracy * report.total)

    def test_task_mismatch(self, service, logistic_corpus, tmp_path):
        model_out = tmp_path / "model.txt"
        service.run_train(
            RunManifest(
                task=TaskKind.logistic,
                data=logistic_corpus["data"],
                solver=_config(5.0),
                model_out=model_out,
            )
        )
        with pytest.raises(ManifestError):
            service.run_eval(
                EvalRequest(model=model_out, data=logistic_corpus["data"], task=TaskKind.seq)
            )

    def test_dimension_mismatch(self, service, logistic_corpus, tmp_path):
        model_path = tmp_path / "short.txt"
        model_path.write_text(
            "# task: logistic\n# dimension: 7\n# lambda: 0.1\n2\t0.5\n", encoding="utf-8"
        )
        with pytest.raises(DimensionMismatchError):
            service.run_eval(EvalRequest(model=model_path, data=logistic_corpus["data"]))


class TestIndexBase:
    @pytest.fixture
    def zero_based_files(self, tmp_path):
        train = tmp_path / "train.svm"
        train.write_text("1 0:1.0 2:3.0\n-1 1:2.0\n", encoding="utf-8")
        held_out = tmp_path / "test.svm"
        held_out.write_text("1 2:3.0\n", encoding="utf-8")
        return train, held_out

    def test_held_out_file_keeps_training_base(self, zero_based_files):
        train_path, test_path = zero_based_files
        adapter = LogisticTask()
        options = adapter.resolve(train_path, LoadOptions())
        assert options.zero_based is True
        train = adapter.load(train_path, options)
        test = adapter.load(test_path, adapter.options_from(adapter.meta(train, options), options))
        np.testing.assert_array_equal(test.features.to_dense(), [[0.0, 0.0, 3.0]])

    def test_explicit_base_wins_over_detection(self, zero_based_files):
        _, test_path = zero_based_files
        adapter = LogisticTask()
        assert adapter.resolve(test_path, LoadOptions()).zero_based is False
        assert adapter.resolve(test_path, LoadOptions(zero_based=True)).zero_based is True

    def test_model_meta_records_base(self, service, zero_based_files, tmp_path):
        train_path, test_path = zero_based_files
        model_out = tmp_path / "model.txt"
        service.run_train(
            RunManifest(
                task=TaskKind.logistic,
                data=train_path,
                test_data=test_path,
                solver=_config(0.1),
                model_out=model_out,
            )
        )
        model = load_model(model_out)
        assert model.meta["zero_based"] == "1"
        assert model.meta["num_features"] == "3"

        report = service.run_eval(EvalRequest(model=model_out, data=test_path))
        assert report.total == 1

    def test_manifest_base_is_passed_through(self, service, zero_based_files, tmp_path):
        train_path, _ = zero_based_files
        model_out = tmp_path / "model.txt"
        service.run_train(
            RunManifest(
                task=TaskKind.logistic,
                data=train_path,
                solver=_config(0.1),
                model_out=model_out,
                zero_based=True,
            )
        )
        assert load_model(model_out).meta["zero_based"] == "1"


# =================================
# run_compare
# =================================
class TestRunCompare:
    def test_needs_two_solvers(self, service, logistic_corpus):
        manifest = RunManifest(
            task=TaskKind.logistic,
            data=logistic_corpus["data"],
            solver=_config(1.0),
            solvers=[CompareVariant.prox_qn],
        )
        with pytest.raises(ManifestError):
            service.run_compare(manifest)

    def test_writes_aligned_traces(self, service, logistic_corpus, tmp_path):
        manifest = RunManifest(
            task=TaskKind.logistic,
            data=logistic_corpus["data"],
            solver=_config(1.0),
            solvers=[CompareVariant.prox_qn, CompareVariant.prox_qn_noshrink, CompareVariant.prox_gd],
            compare_out=tmp_path / "compare.csv",
            wall_clock=False,
        )
        report = service.run_compare(manifest)
        assert [run.name for run in report.runs] == ["prox_qn", "prox_qn_noshrink", "prox_gd"]

        rows = read_trace(manifest.compare_out)
        assert list(rows[0]) == ["solver", *TRACE_HEADER, "rel_objective_diff"]
        assert len(rows) == sum(len(run.records) for run in report.runs)
        assert {row["solver"] for row in rows} == {"prox_qn", "prox_qn_noshrink", "prox_gd"}
        assert min(float(row["rel_objective_diff"]) for row in rows) == 0.0

    def test_passes_to_reach(self):
        fast = CompareRun(
            "fast",
            SolveResult(np.zeros(1), [], SolveStatus.converged, 1.0, 1, 0.0),
            [_record(0, 2.0, 1), _record(1, 1.0, 4)],
        )
        slow = CompareRun(
            "slow",
            SolveResult(np.zeros(1), [], SolveStatus.max_outer, 1.5, 1, 0.1),
            [_record(0, 2.0, 1), _record(1, 1.5, 9)],
        )
        report = CompareReport([fast, slow])
        assert report.best_objective == 1.0
        assert report.relative_difference(1.5) == pytest.approx(0.5)
        assert report.passes_to_reach("fast", 1e-6) == 4
        assert report.passes_to_reach("slow", 1e-6) is None
        assert report.passes_to_reach("slow", 0.5) == 9


# =================================
# Files and sinks
# =================================
class TestModelFile:
    def test_roundtrip_keeps_every_bit(self, tmp_path):
        weights = np.array([0.0, 1.0 / 3.0, 0.0, -2.5e-17, 0.0])
        path = tmp_path / "m.txt"
        save_model(
            path,
            ModelFile(TaskKind.seq, 5, 0.25, weights, meta={"num_labels": "2", "num_pixels": "1"}),
        )
        model = load_model(path)
        np.testing.assert_array_equal(model.weights, weights)
        assert model.lam == 0.25
        assert model.meta_int("num_labels") == 2
        assert model.meta_int("absent") is None

    @pytest.mark.parametrize(
        "text",
        [
            "# task logistic\n",
            "# task: logistic\n# lambda: 0.1\n",
            "# task: logistic\n# dimension: 3\n# lambda: 0.1\n1 0.5\n",
            "# task: logistic\n# dimension: 3\n# lambda: 0.1\n1\tx\n",
        ],
    )
    def test_malformed_files(self, tmp_path, text):
        path = tmp_path / "bad.txt"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(DataFormatError):
            load_model(path)

    def test_index_outside_dimension(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("# task: logistic\n# dimension: 3\n# lambda: 0.1\n9\t0.5\n", encoding="utf-8")
        with pytest.raises(DimensionMismatchError):
            load_model(path)


class TestTraceOutput:
    def test_writer_without_wall_clock(self):
        stream = io.StringIO()
        writer = TraceCsvWriter(stream, wall_clock=False)
        writer.write(_record(3, 0.125, 7))
        header, row = stream.getvalue().splitlines()
        assert header == ",".join(TRACE_HEADER)
        assert row == "3,0,0,0.125,1,3,1.0,1,7"

    def test_writer_with_extra_columns(self):
        stream = io.StringIO()
        writer = TraceCsvWriter(stream, prefix=["solver"], suffix=["gap"])
        writer.write(_record(0, 1.0, 1), prefix=["a"], suffix=[0.5])
        header, row = stream.getvalue().splitlines()
        assert header.startswith("solver,iter,") and header.endswith(",gap")
        assert row.startswith("a,0,0,0.500000,") and row.endswith(",0.5")

    def test_sink_stops_at_block_exit(self, tmp_path):
        bus = SimpleEventBus()
        path = tmp_path / "trace.csv"
        with trace_sink(bus, path, wall_clock=False):
            bus.publish(IterationCompletedIntegrationEvent("prox_qn", _record(0, 1.0, 1)))
        bus.publish(IterationCompletedIntegrationEvent("prox_qn", _record(1, 0.5, 2)))
        rows = read_trace(path)
        assert [row["iter"] for row in rows] == ["0"]

    def test_collector_filters_by_solver(self):
        collector = TraceCollector("prox_qn")
        collector(IterationCompletedIntegrationEvent("prox_gd", _record(0, 1.0, 1)))
        collector(IterationCompletedIntegrationEvent("prox_qn", _record(0, 2.0, 1)))
        assert [r.objective for r in collector.records] == [2.0]


class TestSyntheticCorpus:
    def test_hier_writes_data_and_hierarchy(self, tmp_path):
        paths = write_synthetic_corpus(TaskKind.hier, tmp_path, seed=0, num_instances=10)
        assert set(paths) == {"data", "hierarchy"}
        assert all(p.exists() for p in paths.values())

    def test_same_seed_same_files(self, tmp_path):
        first = write_synthetic_corpus(TaskKind.seq, tmp_path / "a", seed=5, num_instances=4)
        second = write_synthetic_corpus(TaskKind.seq, tmp_path / "b", seed=5, num_instances=4)
        assert first["data"].read_bytes() == second["data"].read_bytes()
