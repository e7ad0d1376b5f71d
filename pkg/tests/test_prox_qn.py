from collections import defaultdict

import numpy as np
import pytest

from sparse_proxqn.core.base.base_model import WeightModel
from sparse_proxqn.core.base.base_oracle import SmoothLossOracle
from sparse_proxqn.core.events.contracts import (
    EpochStartedIntegrationEvent,
    IterationCompletedIntegrationEvent,
    SolveFinishedIntegrationEvent,
)
from sparse_proxqn.core.events.base import DomainEvent
from sparse_proxqn.core.events.event_bus import SimpleEventBus
from sparse_proxqn.core.exceptions import DivergenceError, LineSearchError
from sparse_proxqn.domains.loss_oracles import LogisticOracle, SeqCrfOracle
from sparse_proxqn.domains.prox_qn import (
    ProxQnSolver,
    SolverConfig,
    SolveStatus,
    armijo_search,
    kkt_violation,
    partial_subgradient,
    prox_gd_solve,
    prox_gd_step,
    shrink_pass,
    solve,
)
from sparse_proxqn.domains.prox_qn.events import EpochStartedEvent
from sparse_proxqn.domains.testkit import superlinear_ratios
from sparse_proxqn.domains.training import CompareReport
from sparse_proxqn.domains.training.services import CompareRun


class QuadraticOracle(SmoothLossOracle[None, WeightModel]):
    """0.5 (w - c)^T A (w - c)."""

    name = "quadratic"

    def __init__(self, a, c):
        super().__init__(None, WeightModel(len(c)))
        self.a = np.asarray(a, dtype=np.float64)
        self.c = np.asarray(c, dtype=np.float64)
        self._g = None

    @property
    def num_samples(self) -> int:
        return 1

    def _infer(self) -> float:
        r = self.model.weights - self.c
        self._g = self.a @ r
        return 0.5 * r @ self._g

    def _partial(self, j: int) -> float:
        return self._g[j]

    def _full_gradient(self) -> np.ndarray:
        return self._g.copy()

    def _loss(self, w: np.ndarray) -> float:
        r = w - self.c
        return 0.5 * r @ self.a @ r

    def predict(self, dataset) -> np.ndarray:
        return np.empty(0)


class RecordingLogisticOracle(LogisticOracle):
    """Logs (model version, coordinate) for every partial gradient read."""

    def __init__(self, dataset):
        super().__init__(dataset)
        self.reads: list[tuple[int, int]] = []

    def partial_gradient(self, j: int) -> float:
        self.reads.append((self.model.version, int(j)))
        return super().partial_gradient(j)


def _lambda_max(oracle) -> float:
    return float(np.abs(oracle.gradient(np.zeros(oracle.dimension))).max())


# =================================
# Stationarity and shrinking
# =================================
class TestPartialSubgradient:
    @pytest.mark.parametrize(
        "w_j, g_j, lam, expected",
        [(0.5, 1.0, 0.3, 1.3), (0.0, 0.2, 0.5, 0.0), (0.0, -0.9, 0.5, -0.4), (-1.0, 0.2, 0.5, -0.3)],
    )
    def test_scalar(self, w_j, g_j, lam, expected):
        assert partial_subgradient(w_j, g_j, lam) == pytest.approx(expected)

    def test_kkt_violation_is_max_abs(self):
        w = np.array([0.5, 0.0, 0.0])
        g = np.array([1.0, 0.2, -0.9])
        assert kkt_violation(w, g, 0.3) == pytest.approx(1.3)
        assert kkt_violation(np.zeros(0), np.zeros(0), 0.3) == 0.0


class TestShrinkPass:
    def _oracle(self, w, g):
        # identity quadratic: gradient at w is w - c
        return QuadraticOracle(np.eye(w.size), w - g)

    def test_removes_small_zero_coordinates(self):
        w = np.array([0.0, -0.2, 0.0])
        g = np.array([0.3, 0.2, 0.9])
        oracle = self._oracle(w, g)
        outcome = shrink_pass(w, np.arange(3), oracle, 0.5, m_hat=0.1, num_samples=1)
        np.testing.assert_array_equal(outcome.active, [1, 2])
        assert outcome.max_violation == pytest.approx(0.4)
        np.testing.assert_allclose(outcome.gradient, g)

    def test_nonzero_weight_always_kept(self):
        w = np.array([-0.2])
        oracle = self._oracle(w, np.array([0.0]))
        outcome = shrink_pass(w, np.arange(1), oracle, 10.0, m_hat=0.0, num_samples=1)
        np.testing.assert_array_equal(outcome.active, [0])

    def test_first_pass_keeps_everything(self):
        w = np.zeros(4)
        oracle = self._oracle(w, np.array([0.0, 0.1, -0.1, 0.05]))
        outcome = shrink_pass(w, np.arange(4), oracle, 0.5, m_hat=float("inf"), num_samples=10)
        np.testing.assert_array_equal(outcome.active, np.arange(4))
        assert outcome.max_violation == 0.0

    def test_only_previous_set_is_examined(self):
        w = np.zeros(5)
        oracle = self._oracle(w, np.ones(5))
        oracle.counters.track_coordinates = True
        outcome = shrink_pass(w, np.array([1, 3]), oracle, 0.5, m_hat=float("inf"), num_samples=1)
        np.testing.assert_array_equal(outcome.examined, [1, 3])
        assert oracle.counters.touched_coordinates == {1, 3}


# =================================
# Line search
# =================================
class TestArmijoSearch:
    def test_full_step_accepted(self):
        oracle = QuadraticOracle(np.eye(1), np.zeros(1))
        w, d = np.array([1.0]), np.array([-1.0])
        step = armijo_search(w, d, 0.5, -1.0, oracle, 0.0, 0.5, 0.1, 40)
        assert step.alpha == 1.0
        assert step.trials == 1
        assert step.objective == pytest.approx(0.0)

    def test_zero_direction_costs_nothing(self):
        oracle = QuadraticOracle(np.eye(2), np.zeros(2))
        w = np.array([1.0, 2.0])
        step = armijo_search(w, np.zeros(2), 2.5, 0.0, oracle, 0.1, 0.5, 0.1, 40)
        assert (step.alpha, step.trials, step.objective) == (1.0, 0, 2.5)
        assert oracle.counters.loss_passes == 0

    def test_backtracks_on_overshoot(self):
        # curvature 10 with d = -2 from w = 1 overshoots to w = -1
        oracle = QuadraticOracle(10.0 * np.eye(1), np.zeros(1))
        w, d = np.array([1.0]), np.array([-2.0])
        step = armijo_search(w, d, 5.0, -20.0, oracle, 0.0, 0.5, 0.5, 40)
        assert step.alpha == 0.5
        assert step.trials == 2
        np.testing.assert_allclose(step.w, [0.0])

    def test_failure_reports_delta_and_last_trial(self):
        oracle = QuadraticOracle(10.0 * np.eye(1), np.zeros(1))
        with pytest.raises(LineSearchError) as info:
            armijo_search(np.array([1.0]), np.array([-2.0]), 5.0, -20.0, oracle, 0.0, 0.5, 0.5, 1)
        assert info.value.delta == -20.0
        assert info.value.last_objective == pytest.approx(5.0)
        assert info.value.trials == 1

    def test_non_finite_objective_is_divergence(self):
        class Exploding(QuadraticOracle):
            def _loss(self, w):
                return float("inf")

        oracle = Exploding(np.eye(1), np.zeros(1))
        with pytest.raises(DivergenceError):
            armijo_search(np.array([1.0]), np.array([-1.0]), 0.5, -1.0, oracle, 0.0, 0.5, 0.1, 5)


# =================================
# Prox-GD
# =================================
class TestProxGd:
    def test_step(self):
        w_plus = prox_gd_step(np.array([1.0, -0.2]), np.array([0.5, 0.0]), 1.0, 0.1)
        np.testing.assert_allclose(w_plus, [0.4, -0.1])

    def test_unregularized_quadratic(self):
        a = np.array([[3.0, 1.0], [1.0, 2.0]])
        c = np.array([1.0, -2.0])
        result = prox_gd_solve(QuadraticOracle(a, c), SolverConfig(lam=0.0, epsilon=1e-9))
        assert result.status == SolveStatus.converged
        np.testing.assert_allclose(result.w, c, atol=1e-8)

    def test_linear_rate_on_ill_conditioned_quadratic(self, rng):
        a = np.diag(np.geomspace(1.0, 100.0, 30))
        c = rng.standard_normal(30)
        result = prox_gd_solve(
            QuadraticOracle(a, c),
            SolverConfig(lam=0.0, epsilon=1e-8, max_outer=20_000, record_iterates=True),
        )
        ratios = superlinear_ratios(result.iterates, c)
        tail = np.asarray(ratios[len(ratios) // 2 :])
        assert np.median(tail) > 0.5
        assert np.exp(np.log(tail).mean()) < 1.0

    def test_reaches_tight_tolerance_on_logistic(self, logistic_data):
        lam = 10.0
        result = prox_gd_solve(
            LogisticOracle(logistic_data), SolverConfig(lam=lam, epsilon=1e-10, max_outer=20_000)
        )
        assert result.status == SolveStatus.converged
        g = LogisticOracle(logistic_data).gradient(result.w)
        assert kkt_violation(result.w, g, lam) <= 1e-10

    def test_stops_when_steps_reach_roundoff(self):
        oracle = QuadraticOracle(np.diag([1.0, 10.0]), np.array([0.3, -0.7]))
        result = prox_gd_solve(oracle, SolverConfig(lam=0.0, epsilon=1e-300, max_outer=5000))
        assert result.status in (SolveStatus.stalled, SolveStatus.converged)
        assert result.iterations < 5000
        np.testing.assert_allclose(result.w, [0.3, -0.7], atol=1e-12)

    def test_divergence_at_start(self):
        oracle = QuadraticOracle(np.eye(2), np.array([np.inf, 0.0]))
        with pytest.raises(DivergenceError):
            prox_gd_solve(oracle, SolverConfig(lam=0.1))


# =================================
# Prox-QN
# =================================
class TestProxQnSolver:
    def test_large_lambda_returns_zero(self, logistic_data):
        lam = 1.01 * _lambda_max(LogisticOracle(logistic_data))
        result = solve(LogisticOracle(logistic_data), SolverConfig(lam=lam))
        assert result.status == SolveStatus.converged
        assert result.nnz == 0
        assert result.max_violation == 0.0
        assert len(result.trace) == 1
        assert result.iterations == 0

    def test_stationary_at_exit(self, small_logistic):
        lam = 0.5
        result = solve(LogisticOracle(small_logistic), SolverConfig(lam=lam, epsilon=1e-6))
        assert result.status == SolveStatus.converged
        g = LogisticOracle(small_logistic).gradient(result.w)
        assert kkt_violation(result.w, g, lam) <= 1e-6

    @pytest.mark.parametrize("task", ["logistic", "seq"])
    def test_stationary_and_agrees_with_prox_gd(self, task, logistic_data, chain_data):
        if task == "logistic":
            make_oracle, lam = (lambda: LogisticOracle(logistic_data)), 10.0
        else:
            make_oracle, lam = (lambda: SeqCrfOracle(chain_data)), 0.5
        qn = solve(make_oracle(), SolverConfig(lam=lam, epsilon=1e-6))
        assert qn.status == SolveStatus.converged
        assert kkt_violation(qn.w, make_oracle().gradient(qn.w), lam) <= 1e-6

        reference = prox_gd_solve(
            make_oracle(), SolverConfig(lam=lam, epsilon=1e-10, max_outer=20_000)
        )
        assert abs(qn.objective - reference.objective) / abs(reference.objective) <= 1e-6

    @pytest.mark.parametrize("task", ["logistic", "seq"])
    def test_shrinking_does_not_change_the_optimum(self, task, logistic_data, chain_data):
        if task == "logistic":
            make_oracle, lam = (lambda: LogisticOracle(logistic_data)), 10.0
        else:
            make_oracle, lam = (lambda: SeqCrfOracle(chain_data)), 0.5
        shrunk = solve(make_oracle(), SolverConfig(lam=lam, epsilon=1e-6))
        full = solve(make_oracle(), SolverConfig(lam=lam, epsilon=1e-6, shrink_enabled=False))
        assert shrunk.status == full.status == SolveStatus.converged
        assert abs(shrunk.objective - full.objective) / abs(full.objective) <= 1e-6
        assert shrunk.epochs <= 10
        assert full.epochs == 1

    def test_trace_invariants(self, logistic_data):
        result = solve(LogisticOracle(logistic_data), SolverConfig(lam=10.0, epsilon=1e-5))
        trace = result.trace
        assert trace[0].iter == 0
        assert trace[0].active_set == logistic_data.num_features
        assert [r.iter for r in trace] == list(range(len(trace)))
        for prev, cur in zip(trace, trace[1:]):
            assert cur.objective <= prev.objective + 1e-9 * abs(prev.objective)
            if cur.epoch == prev.epoch:
                assert cur.active_set <= prev.active_set
            assert cur.epoch >= prev.epoch
            assert cur.oracle_passes > prev.oracle_passes
        assert all(r.nnz <= r.active_set for r in trace)
        assert result.epochs >= trace[-1].epoch + 1

    def test_partial_gradients_only_over_working_set(self, logistic_data):
        oracle = RecordingLogisticOracle(logistic_data)
        solve(oracle, SolverConfig(lam=10.0, epsilon=1e-5))
        groups: dict[int, set[int]] = defaultdict(set)
        for version, j in oracle.reads:
            groups[version].add(j)
        everything = set(range(logistic_data.num_features))
        ordered = [groups[v] for v in sorted(groups)]
        assert ordered[0] == everything
        shrunk_somewhere = False
        for prev, cur in zip(ordered, ordered[1:]):
            assert cur == everything or cur <= prev
            shrunk_somewhere |= cur != everything
        assert shrunk_somewhere

    def test_max_outer_stops(self, logistic_data):
        result = solve(
            LogisticOracle(logistic_data), SolverConfig(lam=1.0, epsilon=1e-10, max_outer=2)
        )
        assert result.status == SolveStatus.max_outer
        assert result.iterations == 2

    def test_same_seed_same_path(self, chain_data):
        config = SolverConfig(lam=0.5, epsilon=1e-4, rng_seed=3)
        first = solve(SeqCrfOracle(chain_data), config)
        second = solve(SeqCrfOracle(chain_data), config)
        np.testing.assert_array_equal(first.w, second.w)
        assert [r.objective for r in first.trace] == [r.objective for r in second.trace]

    def test_divergence_at_start(self):
        oracle = QuadraticOracle(np.eye(2), np.array([np.inf, 0.0]))
        with pytest.raises(DivergenceError):
            solve(oracle, SolverConfig(lam=0.1))

    def test_events(self, small_logistic):
        bus = SimpleEventBus()
        iterations, epochs, finished = [], [], []
        bus.subscribe(IterationCompletedIntegrationEvent, iterations.append)
        bus.subscribe(EpochStartedIntegrationEvent, epochs.append)
        bus.subscribe(SolveFinishedIntegrationEvent, finished.append)

        result = ProxQnSolver(bus).solve(LogisticOracle(small_logistic), SolverConfig(lam=0.5))
        assert [e.record for e in iterations] == result.trace
        assert [e.epoch for e in epochs] == list(range(result.epochs))
        assert len(finished) == 1
        assert finished[0].status == result.status.value
        assert finished[0].iterations == result.iterations
        assert finished[0].nnz == result.nnz

    def test_domain_events_map_to_contracts(self):
        first = EpochStartedEvent(solver="prox_qn", epoch=1, shrink_tol=0.1)
        second = EpochStartedEvent(solver="prox_qn", epoch=2, shrink_tol=0.01)
        assert second.sequence > first.sequence
        assert first.name == "EpochStartedEvent"
        assert first.to_integration() == EpochStartedIntegrationEvent("prox_qn", 1, 0.1)
        with pytest.raises(NotImplementedError):
            DomainEvent().to_integration()


# =================================
# Convergence behaviour
# =================================
class TestConvergenceBehaviour:
    def test_quasi_newton_tail_is_superlinear(self, correlated_logistic):
        # exact inner solves and a fixed working set, the regime of the local rate
        lam = 0.1 * _lambda_max(LogisticOracle(correlated_logistic))
        reference = solve(
            LogisticOracle(correlated_logistic),
            SolverConfig(lam=lam, epsilon=1e-11, max_outer=1000, inner_sweeps=100),
        )
        g_ref = LogisticOracle(correlated_logistic).gradient(reference.w)
        assert kkt_violation(reference.w, g_ref, lam) <= 1e-10

        qn = solve(
            LogisticOracle(correlated_logistic),
            SolverConfig(
                lam=lam,
                epsilon=1e-8,
                max_outer=500,
                shrink_enabled=False,
                inner_sweeps=100,
                record_iterates=True,
            ),
        )
        assert qn.status == SolveStatus.converged
        qn_ratios = superlinear_ratios(qn.iterates, reference.w)
        assert qn_ratios[-1] < 0.1

        gd = prox_gd_solve(
            LogisticOracle(correlated_logistic),
            SolverConfig(lam=lam, epsilon=1e-8, max_outer=20_000, record_iterates=True),
        )
        assert gd.status == SolveStatus.converged
        tail = np.asarray(superlinear_ratios(gd.iterates, reference.w)[-20:])
        assert tail.size == 20
        assert np.exp(np.log(tail).mean()) > 0.5

    def test_fewer_oracle_passes_than_prox_gd_on_chains(self, chain_data):
        lam = 0.5
        qn = solve(SeqCrfOracle(chain_data), SolverConfig(lam=lam, epsilon=1e-6))
        gd = prox_gd_solve(SeqCrfOracle(chain_data), SolverConfig(lam=lam, epsilon=1e-6, max_outer=1500))
        report = CompareReport(
            runs=[CompareRun("prox_qn", qn, qn.trace), CompareRun("prox_gd", gd, gd.trace)]
        )
        qn_passes = report.passes_to_reach("prox_qn", 1e-4)
        gd_passes = report.passes_to_reach("prox_gd", 1e-4)
        assert qn_passes is not None
        if gd_passes is not None:
            assert 3 * qn_passes <= gd_passes
