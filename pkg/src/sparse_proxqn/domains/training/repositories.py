"""
Run outputs on disk.

  - model file: ``# key: value`` header lines (task, dimension, lambda and
    task shape), then ``index<TAB>weight`` for every nonzero weight.
  - trace CSV: fixed header ``TRACE_HEADER``, one row per outer iteration.
  - summary: flat ``key: value`` text block.
"""

import csv
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from sparse_proxqn.core.exceptions import DataFormatError, DimensionMismatchError
from sparse_proxqn.domains.prox_qn.models import TraceRecord

from .models import ModelFile
from .schemas import TaskKind

TRACE_HEADER = [
    "iter",
    "epoch",
    "time_sec",
    "objective",
    "nnz",
    "active_set",
    "step_size",
    "inner_sweeps",
    "oracle_passes",
]


# =================================
# Model file
# =================================
def save_model(path: str | Path, model: ModelFile) -> None:
    """Write the header and nonzero weights; ``repr`` keeps every bit."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "task": model.task.value,
        "dimension": str(model.dimension),
        "lambda": repr(float(model.lam)),
        **model.meta,
    }
    with path.open("w", encoding="utf-8") as fh:
        for key, value in header.items():
            fh.write(f"# {key}: {value}\n")
        for index in np.flatnonzero(model.weights):
            fh.write(f"{index}\t{float(model.weights[index])!r}\n")


def load_model(path: str | Path) -> ModelFile:
    path = Path(path)
    header: dict[str, str] = {}
    entries: list[tuple[int, float]] = []
    with path.open(encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                key, sep, value = line[1:].partition(":")
                if not sep:
                    raise DataFormatError("header line without ':'", path=path, line_number=line_number)
                header[key.strip()] = value.strip()
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataFormatError("expected 'index<TAB>weight'", path=path, line_number=line_number)
            try:
                entries.append((int(parts[0]), float(parts[1])))
            except ValueError as e:
                raise DataFormatError(str(e), path=path, line_number=line_number) from e

    try:
        task = TaskKind(header.pop("task"))
        dimension = int(header.pop("dimension"))
        lam = float(header.pop("lambda"))
    except (KeyError, ValueError) as e:
        raise DataFormatError(f"incomplete model header: {e}", path=path) from e

    weights = np.zeros(dimension)
    for index, value in entries:
        if not 0 <= index < dimension:
            raise DimensionMismatchError(
                "weight index outside the model dimension", index=index, dimension=dimension
            )
        weights[index] = value
    return ModelFile(task=task, dimension=dimension, lam=lam, weights=weights, meta=header)


# =================================
# Trace CSV
# =================================
class TraceCsvWriter:
    """
    Streams trace rows; ``time_sec`` is written as 0 unless ``wall_clock``.
    ``prefix`` and ``suffix`` name extra columns around the fixed ones.
    """

    def __init__(
        self,
        stream: IO[str],
        *,
        wall_clock: bool = True,
        prefix: Sequence[str] = (),
        suffix: Sequence[str] = (),
    ):
        self.wall_clock = wall_clock
        self._writer = csv.writer(stream, lineterminator="\n")
        self._writer.writerow([*prefix, *TRACE_HEADER, *suffix])

    def row(self, record: TraceRecord) -> list[str]:
        return [
            str(record.iter),
            str(record.epoch),
            f"{record.elapsed_seconds:.6f}" if self.wall_clock else "0",
            repr(float(record.objective)),
            str(record.nnz),
            str(record.active_set),
            repr(float(record.step_size)),
            str(record.inner_sweeps),
            str(record.oracle_passes),
        ]

    def write(
        self, record: TraceRecord, *, prefix: Sequence[object] = (), suffix: Sequence[object] = ()
    ) -> None:
        self._writer.writerow([*map(str, prefix), *self.row(record), *map(str, suffix)])


def write_trace(
    path: str | Path, records: Iterable[TraceRecord], *, wall_clock: bool = True
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = TraceCsvWriter(fh, wall_clock=wall_clock)
        for record in records:
            writer.write(record)


def read_trace(path: str | Path) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


# =================================
# Summary
# =================================
def write_summary(path: str | Path, values: Mapping[str, object]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for key, value in values.items():
            fh.write(f"{key}: {value}\n")


def read_summary(path: str | Path) -> dict[str, str]:
    out = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            key, sep, value = line.partition(":")
            if sep:
                out[key.strip()] = value.strip()
    return out
