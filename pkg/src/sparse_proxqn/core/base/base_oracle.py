from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Generic, Iterable, TypeVar

import numpy as np

from sparse_proxqn.core.exceptions import StaleStatisticsError

from .base_model import WeightModel

DatasetType = TypeVar("DatasetType")
ModelType = TypeVar("ModelType", bound=WeightModel)
T = TypeVar("T")
R = TypeVar("R")


@dataclass
class OracleCounters:
    """Access accounting: passes over the data and per-coordinate gradient reads."""

    inference_passes: int = 0
    loss_passes: int = 0
    partial_gradient_calls: int = 0
    track_coordinates: bool = False
    touched_coordinates: set[int] = field(default_factory=set)

    @property
    def passes(self) -> int:
        return self.inference_passes + self.loss_passes

    def reset(self) -> None:
        self.inference_passes = 0
        self.loss_passes = 0
        self.partial_gradient_calls = 0
        self.touched_coordinates.clear()


class SmoothLossOracle(ABC, Generic[DatasetType, ModelType]):
    """
    Smooth-loss oracle over a fixed dataset.

    Contract:
        loss = oracle.full_inference(w)    # one pass, caches statistics
        g_j = oracle.partial_gradient(j)   # valid until the model changes
        f = oracle.loss_at(w)              # one pass, caches nothing

    Subclasses implement ``_infer`` (loss + cached statistics for the current
    model weights), ``_partial`` and ``_loss``.
    """

    name: str = "oracle"

    def __init__(self, dataset: DatasetType, model: ModelType, *, threads: int = 1):
        self.dataset = dataset
        self.model = model
        self.threads = threads
        self.counters = OracleCounters()
        self._cache_version: int | None = None
        self._cached_loss: float | None = None

    # -------------------------
    # contract
    # -------------------------
    @property
    def dimension(self) -> int:
        return self.model.dimension

    @property
    @abstractmethod
    def num_samples(self) -> int: ...

    def full_inference(self, w: np.ndarray) -> float:
        self.model.set_weights(w)
        self.counters.inference_passes += 1
        self._cached_loss = float(self._infer())
        self._cache_version = self.model.version
        return self._cached_loss

    def partial_gradient(self, j: int) -> float:
        self._require_fresh()
        self.counters.partial_gradient_calls += 1
        if self.counters.track_coordinates:
            self.counters.touched_coordinates.add(int(j))
        return float(self._partial(int(j)))

    def loss_at(self, w: np.ndarray) -> float:
        self.counters.loss_passes += 1
        return float(self._loss(np.asarray(w, dtype=np.float64)))

    def gradient(self, w: np.ndarray | None = None) -> np.ndarray:
        """Full gradient; runs inference first when ``w`` is given."""
        if w is not None:
            self.full_inference(w)
        self._require_fresh()
        self.counters.partial_gradient_calls += self.dimension
        return self._full_gradient()

    def loss_and_gradient(self, w: np.ndarray) -> tuple[float, np.ndarray]:
        loss = self.full_inference(w)
        return loss, self.gradient()

    @property
    def is_fresh(self) -> bool:
        return self._cache_version is not None and self._cache_version == self.model.version

    # -------------------------
    # hooks
    # -------------------------
    @abstractmethod
    def _infer(self) -> float: ...

    @abstractmethod
    def _partial(self, j: int) -> float: ...

    @abstractmethod
    def _loss(self, w: np.ndarray) -> float: ...

    def _full_gradient(self) -> np.ndarray:
        return np.asarray([self._partial(j) for j in range(self.dimension)])

    @abstractmethod
    def predict(self, dataset: DatasetType) -> np.ndarray:
        """Predicted labels for ``dataset`` under the current model weights."""

    # -------------------------
    # helpers
    # -------------------------
    def _require_fresh(self) -> None:
        if not self.is_fresh:
            raise StaleStatisticsError(
                "partial gradient requested without inference at the current weights",
                oracle=self.name,
            )

    def _map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        """Ordered map over instances, threaded when ``threads > 1``."""
        if self.threads <= 1:
            return [fn(item) for item in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))
