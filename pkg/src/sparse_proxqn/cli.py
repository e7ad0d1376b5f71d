# cli.py
from functools import wraps
from pathlib import Path
from typing import Callable, Optional

import typer
from dotenv import load_dotenv
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table

from sparse_proxqn.core.config import BASE_DIR, settings
from sparse_proxqn.core.containers import build_container
from sparse_proxqn.core.exceptions import ProxQnError
from sparse_proxqn.core.logging import configure_logging, log_info
from sparse_proxqn.domains.prox_qn.schemas import SolverConfig, SolverKind
from sparse_proxqn.domains.training import (
    CompareVariant,
    EvalRequest,
    RunManifest,
    SplitSpec,
    TaskKind,
    TrainingService,
    write_synthetic_corpus,
)

load_dotenv(BASE_DIR / ".env")

cli = typer.Typer(no_args_is_help=True)

console = Console()


def _handle_errors(fn: Callable) -> Callable:
    """Report library errors in red and exit with their code."""

    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValidationError as e:
            for err in e.errors():
                loc = ".".join(str(part) for part in err["loc"])
                console.print(f"[red]invalid {loc}: {err['msg']}[/red]")
            raise typer.Exit(2)
        except ProxQnError as e:
            console.print(f"[red]{e}[/red]")
            raise typer.Exit(e.exit_code)
        except OSError as e:
            console.print(f"[red]{e}[/red]")
            raise typer.Exit(1)

    return wrapper


def _service() -> TrainingService:
    return build_container().resolve(TrainingService)


def _solver_kind(name: str) -> SolverKind:
    return SolverKind(name.replace("-", "_"))


def _print_table(title: str, values: dict[str, object]) -> None:
    table = Table(title=title, show_header=False)
    table.add_column("key", style="cyan")
    table.add_column("value")
    for key, value in values.items():
        table.add_row(key, str(value))
    console.print(table)


def _manifest(
    *,
    task: TaskKind,
    data: Path,
    hierarchy: Optional[Path],
    test_data: Optional[Path],
    lam: float,
    epsilon: float,
    memory: int,
    beta: float,
    sigma: float,
    max_inner: int,
    max_outer: int,
    solver: str,
    no_shrink: bool,
    seed: int,
    split: Optional[float],
    trace_out: Optional[Path],
    model_out: Optional[Path],
    summary_out: Optional[Path],
    threads: int,
    num_pixels: int,
    scale: bool,
    zero_based: Optional[bool],
    wall_clock: bool,
    **extra,
) -> RunManifest:
    config = SolverConfig(
        **{"lambda": lam},
        epsilon=epsilon,
        memory=memory,
        beta=beta,
        sigma=sigma,
        max_inner=max_inner,
        max_outer=max_outer,
        shrink_enabled=not no_shrink,
        rng_seed=seed,
        solver_kind=_solver_kind(solver),
    )
    return RunManifest(
        task=task,
        data=data,
        hierarchy=hierarchy,
        test_data=test_data,
        split=SplitSpec(fraction=split, seed=seed) if split is not None else None,
        solver=config,
        trace_out=trace_out,
        model_out=model_out,
        summary_out=summary_out,
        threads=threads,
        num_pixels=num_pixels,
        scale=scale,
        zero_based=zero_based,
        wall_clock=wall_clock,
        **extra,
    )


@cli.callback()
def main(
    log_level: str = typer.Option(settings.log_level, help="DEBUG, INFO, WARNING or ERROR."),
    plain: bool = typer.Option(settings.log_plain, help="Log without timestamps or colors."),
):
    """Sparse l1-regularized training with proximal quasi-Newton."""
    configure_logging(log_level, plain=plain)


# ---- shared options ----
TaskOpt = typer.Option(..., "--task", help="seq, hier or logistic.")
DataOpt = typer.Option(..., "--data", help="Training data file.")
HierarchyOpt = typer.Option(None, "--hierarchy", help="'parent child' file (hier task).")
TestDataOpt = typer.Option(None, "--test-data", help="Held-out data file.")
LambdaOpt = typer.Option(..., "--lambda", help="l1 weight.")
EpsilonOpt = typer.Option(settings.epsilon, "--epsilon")
MemoryOpt = typer.Option(settings.memory, "--memory")
BetaOpt = typer.Option(settings.beta, "--beta")
SigmaOpt = typer.Option(settings.sigma, "--sigma")
MaxInnerOpt = typer.Option(settings.max_inner, "--max-inner")
MaxOuterOpt = typer.Option(settings.max_outer, "--max-outer")
NoShrinkOpt = typer.Option(False, "--no-shrink", help="Keep every coordinate active.")
SeedOpt = typer.Option(settings.seed, "--seed")
SplitOpt = typer.Option(None, "--split", help="Training fraction of a random split.")
ThreadsOpt = typer.Option(settings.threads, "--threads", help="Oracle worker threads.")
NumPixelsOpt = typer.Option(128, "--num-pixels", help="Pixels per OCR letter.")
ScaleOpt = typer.Option(False, "--scale", help="Min-max scale features to [0, 1].")
IndexBaseOpt = typer.Option(
    None, "--zero-based/--one-based", help="svmlight index base, read off the training file by default."
)
WallClockOpt = typer.Option(True, "--wall-clock/--no-wall-clock", help="Record elapsed time.")


@cli.command()
@_handle_errors
def train(
    task: TaskKind = TaskOpt,
    data: Path = DataOpt,
    hierarchy: Optional[Path] = HierarchyOpt,
    test_data: Optional[Path] = TestDataOpt,
    lam: float = LambdaOpt,
    epsilon: float = EpsilonOpt,
    memory: int = MemoryOpt,
    beta: float = BetaOpt,
    sigma: float = SigmaOpt,
    max_inner: int = MaxInnerOpt,
    max_outer: int = MaxOuterOpt,
    solver: str = typer.Option("prox-qn", "--solver", help="prox-qn or prox-gd."),
    no_shrink: bool = NoShrinkOpt,
    seed: int = SeedOpt,
    split: Optional[float] = SplitOpt,
    trace_out: Optional[Path] = typer.Option(None, "--trace-out"),
    model_out: Optional[Path] = typer.Option(None, "--model-out"),
    summary_out: Optional[Path] = typer.Option(None, "--summary-out"),
    threads: int = ThreadsOpt,
    num_pixels: int = NumPixelsOpt,
    scale: bool = ScaleOpt,
    zero_based: Optional[bool] = IndexBaseOpt,
    wall_clock: bool = WallClockOpt,
):
    """Train one model and write its trace, weights and summary."""
    manifest = _manifest(**locals())
    summary = _service().run_train(manifest)
    _print_table("summary", summary.as_dict())
    if manifest.model_out is not None:
        log_info(f"model written to {manifest.model_out}")


@cli.command("eval")
@_handle_errors
def evaluate(
    model: Path = typer.Option(..., "--model", help="Model file from train."),
    data: Path = DataOpt,
    task: Optional[TaskKind] = typer.Option(None, "--task"),
    hierarchy: Optional[Path] = HierarchyOpt,
    num_pixels: Optional[int] = typer.Option(None, "--num-pixels"),
    scale: bool = ScaleOpt,
    zero_based: Optional[bool] = IndexBaseOpt,
    threads: int = ThreadsOpt,
):
    """Report held-out accuracy of a saved model."""
    report = _service().run_eval(
        EvalRequest(
            model=model,
            data=data,
            task=task,
            hierarchy=hierarchy,
            num_pixels=num_pixels,
            scale=scale,
            zero_based=zero_based,
            threads=threads,
        )
    )
    _print_table(
        "evaluation",
        {
            "task": report.task.value,
            "accuracy": f"{report.accuracy:.6f}",
            "correct": report.correct,
            "total": report.total,
        },
    )


@cli.command()
@_handle_errors
def compare(
    task: TaskKind = TaskOpt,
    data: Path = DataOpt,
    hierarchy: Optional[Path] = HierarchyOpt,
    lam: float = LambdaOpt,
    solvers: str = typer.Option(
        "prox-qn,prox-gd", "--solvers", help="Comma list of prox-qn, prox-qn-noshrink, prox-gd."
    ),
    epsilon: float = EpsilonOpt,
    memory: int = MemoryOpt,
    beta: float = BetaOpt,
    sigma: float = SigmaOpt,
    max_inner: int = MaxInnerOpt,
    max_outer: int = MaxOuterOpt,
    seed: int = SeedOpt,
    split: Optional[float] = SplitOpt,
    out: Path = typer.Option(Path("compare.csv"), "--out", help="Comparison CSV."),
    threads: int = ThreadsOpt,
    num_pixels: int = NumPixelsOpt,
    scale: bool = ScaleOpt,
    zero_based: Optional[bool] = IndexBaseOpt,
    wall_clock: bool = WallClockOpt,
):
    """Run several solvers on the same data and write aligned traces."""
    variants = [
        CompareVariant(name.strip().replace("-", "_")) for name in solvers.split(",") if name.strip()
    ]
    manifest = _manifest(
        task=task,
        data=data,
        hierarchy=hierarchy,
        test_data=None,
        lam=lam,
        epsilon=epsilon,
        memory=memory,
        beta=beta,
        sigma=sigma,
        max_inner=max_inner,
        max_outer=max_outer,
        solver="prox-qn",
        no_shrink=False,
        seed=seed,
        split=split,
        trace_out=None,
        model_out=None,
        summary_out=None,
        threads=threads,
        num_pixels=num_pixels,
        scale=scale,
        zero_based=zero_based,
        wall_clock=wall_clock,
        solvers=variants,
        compare_out=out,
    )
    report = _service().run_compare(manifest)
    table = Table(title="comparison")
    for column in ("solver", "status", "objective", "nnz", "iterations", "oracle passes"):
        table.add_column(column)
    for run in report.runs:
        table.add_row(
            run.name,
            run.result.status.value,
            f"{run.result.objective:.10g}",
            str(run.result.nnz),
            str(run.result.iterations),
            str(run.records[-1].oracle_passes if run.records else 0),
        )
    console.print(table)
    log_info(f"comparison written to {out}")


@cli.command("make-data")
@_handle_errors
def make_data(
    task: TaskKind = TaskOpt,
    out_dir: Path = typer.Option(settings.output_dir / "data", "--out-dir"),
    seed: int = SeedOpt,
    num_instances: Optional[int] = typer.Option(None, "--num-instances"),
    num_pixels: int = typer.Option(5, "--num-pixels", help="Pixels per letter (seq task)."),
):
    """Write a small synthetic corpus in the loaders' formats."""
    paths = write_synthetic_corpus(
        task, out_dir, seed=seed, num_instances=num_instances, num_pixels=num_pixels
    )
    for role, path in paths.items():
        log_info(f"{role}: {path}")


if __name__ == "__main__":
    cli()
