"""Proximal gradient baseline (ISTA with backtracking)."""

import time

import numpy as np

from sparse_proxqn.core.base.base_oracle import SmoothLossOracle
from sparse_proxqn.core.events.event_bus import EventBus, SimpleEventBus
from sparse_proxqn.core.exceptions import DivergenceError, LineSearchError
from sparse_proxqn.core.logging import get_logger
from sparse_proxqn.domains.inner_cd import soft_threshold

from .events import EpochStartedEvent, IterationCompletedEvent, SolveFinishedEvent
from .models import SolveResult, SolveStatus, TraceRecord
from .schemas import SolverConfig
from .services import ROUNDOFF, kkt_violation, objective

log = get_logger("prox_gd")


def prox_gd_step(w: np.ndarray, g: np.ndarray, eta: float, lam: float) -> np.ndarray:
    """soft_threshold(w - eta*g, eta*lam), entrywise."""
    return soft_threshold(w - eta * g, eta * lam)


class ProxGdSolver:
    """
    Each iteration tries ``eta = eta_prev / beta`` first and shrinks it by
    ``beta`` until the quadratic upper bound holds at the proximal point.
    Once the two loss values agree to roundoff the bound is checked on
    gradients, ``(g+ - g).diff <= |diff|^2 / eta``. A step whose norm is at
    roundoff relative to ``w`` ends the run with status ``stalled``.
    """

    name = "prox_gd"

    def __init__(self, event_bus: EventBus):
        self.event_bus = event_bus

    def _publish(self, event) -> None:
        self.event_bus.publish(event.to_integration())

    def solve(self, oracle: SmoothLossOracle, config: SolverConfig) -> SolveResult:
        dim = oracle.dimension
        lam = config.lam
        started = time.perf_counter()

        w = np.zeros(dim)
        loss, g = oracle.loss_and_gradient(w)
        f_w = objective(loss, w, lam)
        if not np.isfinite(f_w):
            raise DivergenceError("objective is not finite at w = 0", objective=f_w)
        eta = 1.0
        trace: list[TraceRecord] = []
        iterates: list[np.ndarray] | None = [] if config.record_iterates else None
        status = SolveStatus.max_outer
        error: Exception | None = None
        iteration = 0

        def emit(step: float, trials: int) -> None:
            record = TraceRecord(
                iter=iteration,
                epoch=0,
                elapsed_seconds=time.perf_counter() - started,
                objective=f_w,
                nnz=int(np.count_nonzero(w)),
                active_set=dim,
                step_size=step,
                inner_sweeps=0,
                line_search_trials=trials,
                oracle_passes=oracle.counters.passes,
            )
            trace.append(record)
            if iterates is not None:
                iterates.append(w.copy())
            self._publish(IterationCompletedEvent(solver=self.name, record=record))

        emit(0.0, 0)
        self._publish(EpochStartedEvent(solver=self.name, epoch=0, shrink_tol=config.epsilon))

        violation = kkt_violation(w, g, lam)
        while violation > config.epsilon:
            if iteration >= config.max_outer:
                break
            eta /= config.beta
            accepted = False
            g_plus: np.ndarray | None = None
            loss_plus = float("nan")
            for trial in range(1, config.max_trials + 1):
                w_plus = prox_gd_step(w, g, eta, lam)
                diff = w_plus - w
                loss_plus = oracle.loss_at(w_plus)
                if np.isfinite(loss_plus):
                    if loss_plus <= loss + g @ diff + (diff @ diff) / (2.0 * eta):
                        accepted = True
                        break
                    if abs(loss_plus - loss) <= ROUNDOFF * max(1.0, abs(loss)):
                        # loss values agree to roundoff; bound the local curvature instead
                        loss_plus, g_plus = oracle.loss_and_gradient(w_plus)
                        if (g_plus - g) @ diff <= (diff @ diff) / eta:
                            accepted = True
                            break
                        g_plus = None
                eta *= config.beta
            if not accepted:
                if not np.isfinite(loss_plus):
                    raise DivergenceError("objective is not finite at the proximal point", eta=eta)
                error = LineSearchError(
                    "sufficient decrease not met",
                    delta=float(g @ diff),
                    last_objective=objective(loss_plus, w_plus, lam),
                    trials=config.max_trials,
                )
                log.error("backtracking failed at iteration {}: {}", iteration + 1, error)
                status = SolveStatus.line_search_failure
                break

            iteration += 1
            w = w_plus
            if g_plus is None:
                loss, g = oracle.loss_and_gradient(w)
            else:
                loss, g = loss_plus, g_plus
            f_w = objective(loss, w, lam)
            violation = kkt_violation(w, g, lam)
            step_norm = float(np.linalg.norm(diff))
            at_roundoff = step_norm <= ROUNDOFF * max(1.0, float(np.linalg.norm(w)))
            log.debug(
                "iter {} | f={:.10g} nnz={} eta={:.3e} kkt={:.3e}",
                iteration,
                f_w,
                int(np.count_nonzero(w)),
                eta,
                violation,
            )
            emit(eta, trial)
            if violation > config.epsilon and at_roundoff:
                log.warning(
                    "step {:.3e} is at roundoff after {} iterations, stopping at kkt={:.3e}",
                    step_norm,
                    iteration,
                    violation,
                )
                status = SolveStatus.stalled
                break
        else:
            status = SolveStatus.converged

        result = SolveResult(
            w=w,
            trace=trace,
            status=status,
            objective=f_w,
            epochs=1,
            max_violation=violation,
            iterates=iterates,
            error=error,
        )
        log.info(
            "{} after {} iterations | f={:.10g} nnz={}",
            status.value,
            result.iterations,
            f_w,
            result.nnz,
        )
        self._publish(SolveFinishedEvent(solver=self.name, result=result))
        return result


def prox_gd_solve(
    oracle: SmoothLossOracle, config: SolverConfig, *, event_bus: EventBus | None = None
) -> SolveResult:
    return ProxGdSolver(event_bus if event_bus is not None else SimpleEventBus()).solve(oracle, config)
