import time

import numpy as np

from sparse_proxqn.core.base.base_oracle import SmoothLossOracle
from sparse_proxqn.core.events.event_bus import EventBus, SimpleEventBus
from sparse_proxqn.core.exceptions import DivergenceError, LineSearchError
from sparse_proxqn.core.logging import get_logger
from sparse_proxqn.domains.inner_cd import inner_sweep_budget, solve_subproblem
from sparse_proxqn.domains.lbfgs_core import LbfgsState
from sparse_proxqn.domains.sparse_data.models import SparseVector

from .events import EpochStartedEvent, IterationCompletedEvent, SolveFinishedEvent
from .models import (
    ArmijoStep,
    ShrinkOutcome,
    SolveResult,
    SolveStatus,
    TraceRecord,
    WorkingSet,
)
from .schemas import SolverConfig

log = get_logger("prox_qn")

# relative resolution of objective values and step norms
ROUNDOFF = 64 * np.finfo(np.float64).eps


# =================================
# Stationarity
# =================================
def partial_subgradient(w_j, g_j, lam: float):
    """
    Minimal-norm element of the subdifferential of ``l(w) + lam*|w|_1`` along
    each coordinate. Works elementwise on arrays.
    """
    w_j = np.asarray(w_j, dtype=np.float64)
    g_j = np.asarray(g_j, dtype=np.float64)
    out = np.where(
        w_j != 0,
        g_j + np.sign(w_j) * lam,
        np.sign(g_j) * np.maximum(np.abs(g_j) - lam, 0.0),
    )
    return float(out) if out.ndim == 0 else out


def kkt_violation(w: np.ndarray, g: np.ndarray, lam: float) -> float:
    """max_j |partial_j f(w)| over every coordinate of ``w``."""
    if np.size(w) == 0:
        return 0.0
    return float(np.max(np.abs(partial_subgradient(w, g, lam))))


def objective(loss: float, w: np.ndarray, lam: float) -> float:
    return float(loss + lam * np.abs(w).sum())


# =================================
# Shrinking
# =================================
def shrink_pass(
    w: np.ndarray,
    active_prev: np.ndarray,
    oracle: SmoothLossOracle,
    lam: float,
    m_hat: float,
    num_samples: int,
) -> ShrinkOutcome:
    """
    Evaluate partial gradients over ``active_prev`` and keep j when
    ``w_j != 0`` or ``|g_j| - lam + m_hat/N > 0``. The oracle must hold
    statistics for ``w``; they are computed here otherwise.

    Returns the kept set, the max |partial f| over kept coordinates and the
    gradient over every examined coordinate.
    """
    if not oracle.is_fresh:
        oracle.full_inference(w)
    examined = np.asarray(active_prev, dtype=np.int64)
    g = np.asarray([oracle.partial_gradient(j) for j in examined], dtype=np.float64)
    w_a = w[examined]
    slack = m_hat / max(num_samples, 1)
    keep = (w_a != 0) | (np.abs(g) - lam + slack > 0)
    violation = np.abs(partial_subgradient(w_a[keep], g[keep], lam))
    m_new = float(violation.max()) if violation.size else 0.0
    return ShrinkOutcome(examined[keep], m_new, examined, g)


# =================================
# Line search
# =================================
def armijo_search(
    w: np.ndarray,
    d: np.ndarray,
    f_w: float,
    delta: float,
    oracle: SmoothLossOracle,
    lam: float,
    beta: float,
    sigma: float,
    max_trials: int,
) -> ArmijoStep:
    """
    First alpha in 1, beta, beta^2, ... with
    ``F(w + alpha d) <= F(w) + alpha sigma delta``, F the full objective,
    up to ``ROUNDOFF`` relative to F(w).
    Trials use the oracle's loss-only path.
    """
    if not np.any(d):
        return ArmijoStep(1.0, w, f_w, 0)
    alpha = 1.0
    resolution = ROUNDOFF * max(1.0, abs(f_w))
    f_trial = float("nan")
    for trial in range(1, max_trials + 1):
        w_trial = w + alpha * d
        f_trial = objective(oracle.loss_at(w_trial), w_trial, lam)
        if np.isfinite(f_trial) and f_trial <= f_w + alpha * sigma * delta + resolution:
            return ArmijoStep(alpha, w_trial, f_trial, trial)
        alpha *= beta
    if not np.isfinite(f_trial):
        raise DivergenceError("objective is not finite along the search direction", delta=delta)
    raise LineSearchError(
        "Armijo condition not met", delta=delta, last_objective=f_trial, trials=max_trials
    )


# =================================
# ProxQnSolver
# =================================
class ProxQnSolver:
    """
    Proximal quasi-Newton with compact L-BFGS, coordinate-descent inner
    solves and epoch-based shrinking.

    Per outer iteration the oracle runs one full inference at the accepted
    iterate and one loss-only pass per line-search trial. Partial gradients
    are read only over the working set carried into the iteration, so the
    curvature pair of the previous step is completed during the next shrink
    pass instead of with a second sweep over the same coordinates.
    """

    name = "prox_qn"

    def __init__(self, event_bus: EventBus):
        self.event_bus = event_bus

    def _publish(self, event) -> None:
        self.event_bus.publish(event.to_integration())

    def solve(self, oracle: SmoothLossOracle, config: SolverConfig) -> SolveResult:
        dim = oracle.dimension
        lam = config.lam
        rng = np.random.default_rng(config.rng_seed)
        lbfgs = LbfgsState(dim, config.memory, curvature_floor=config.curvature_floor)
        started = time.perf_counter()

        w = np.zeros(dim)
        f_w = objective(oracle.full_inference(w), w, lam)
        if not np.isfinite(f_w):
            raise DivergenceError("objective is not finite at w = 0", objective=f_w)
        ws = WorkingSet.full(dim)
        trace: list[TraceRecord] = []
        iterates: list[np.ndarray] | None = [] if config.record_iterates else None
        pending: tuple[SparseVector, np.ndarray] | None = None
        iteration = 0
        status = SolveStatus.max_outer
        error: Exception | None = None

        def emit(step: float, sweeps: int, trials: int) -> None:
            record = TraceRecord(
                iter=iteration,
                epoch=ws.epoch,
                elapsed_seconds=time.perf_counter() - started,
                objective=f_w,
                nnz=int(np.count_nonzero(w)),
                active_set=ws.size,
                step_size=step,
                inner_sweeps=sweeps,
                line_search_trials=trials,
                oracle_passes=oracle.counters.passes,
            )
            trace.append(record)
            if iterates is not None:
                iterates.append(w.copy())
            self._publish(IterationCompletedEvent(solver=self.name, record=record))

        emit(0.0, 0, 0)
        self._publish(EpochStartedEvent(solver=self.name, epoch=0, shrink_tol=config.epsilon))

        while True:
            # --- gradients over the carried working set, shrink ---
            if config.shrink_enabled:
                outcome = shrink_pass(w, ws.active, oracle, lam, ws.m_hat, oracle.num_samples)
            else:
                outcome = shrink_pass(w, ws.active, oracle, lam, float("inf"), oracle.num_samples)
            ws.m_current = outcome.max_violation
            ws.m_hat = outcome.max_violation

            if pending is not None:
                s, g_old = pending
                y = SparseVector(s.indices, outcome.gradient - g_old)
                lbfgs.push_pair(s, y)
                pending = None

            full_pass = outcome.examined.size == dim
            if not config.shrink_enabled:
                if outcome.max_violation <= config.epsilon:
                    status = SolveStatus.converged
                    break
            else:
                if ws.shrink_tol is None:
                    ws.shrink_tol = max(config.epsilon, outcome.max_violation / config.cooling_factor)
                if outcome.max_violation <= ws.shrink_tol:
                    if full_pass and outcome.max_violation <= config.epsilon:
                        status = SolveStatus.converged
                        break
                    # epoch boundary: bring every coordinate back
                    oracle.full_inference(w)
                    ws.restore(dim)
                    lbfgs.reset()
                    ws.shrink_tol = max(config.epsilon, ws.shrink_tol / config.cooling_factor)
                    ws.epoch += 1
                    log.info(
                        "epoch {} | shrink_tol={:.3e} f={:.10g} nnz={}",
                        ws.epoch,
                        ws.shrink_tol,
                        f_w,
                        int(np.count_nonzero(w)),
                    )
                    self._publish(
                        EpochStartedEvent(solver=self.name, epoch=ws.epoch, shrink_tol=ws.shrink_tol)
                    )
                    continue

            if iteration >= config.max_outer:
                break

            # --- subproblem over the new working set ---
            ws.active = outcome.active
            g_active = outcome.gradient[np.isin(outcome.examined, ws.active, assume_unique=True)]
            sweeps = config.inner_sweeps or inner_sweep_budget(dim, ws.size, config.max_inner)
            direction = solve_subproblem(
                g_active, w[ws.active], ws.active, lbfgs, sweeps, rng, lam
            )
            d = direction.to_dense(dim)

            try:
                step = armijo_search(
                    w,
                    d,
                    f_w,
                    direction.delta_model,
                    oracle,
                    lam,
                    config.beta,
                    config.sigma,
                    config.max_trials,
                )
            except LineSearchError as exc:
                log.error("line search failed at iteration {}: {}", iteration + 1, exc)
                status = SolveStatus.line_search_failure
                error = exc
                break

            iteration += 1
            w = step.w
            f_w = objective(oracle.full_inference(w), w, lam)
            pending = (SparseVector(ws.active, step.alpha * direction.d), g_active)
            log.debug(
                "iter {} | epoch {} | f={:.10g} nnz={} |A|={} alpha={:g} sweeps={}",
                iteration,
                ws.epoch,
                f_w,
                int(np.count_nonzero(w)),
                ws.size,
                step.alpha,
                sweeps,
            )
            emit(step.alpha, sweeps, step.trials)

        result = SolveResult(
            w=w,
            trace=trace,
            status=status,
            objective=f_w,
            epochs=ws.epoch + 1,
            max_violation=ws.m_current,
            iterates=iterates,
            error=error,
        )
        log.info(
            "{} after {} iterations | f={:.10g} nnz={} epochs={}",
            status.value,
            result.iterations,
            f_w,
            result.nnz,
            result.epochs,
        )
        self._publish(SolveFinishedEvent(solver=self.name, result=result))
        return result


def solve(
    oracle: SmoothLossOracle, config: SolverConfig, *, event_bus: EventBus | None = None
) -> SolveResult:
    return ProxQnSolver(event_bus if event_bus is not None else SimpleEventBus()).solve(oracle, config)
