import numpy as np

from sparse_proxqn.core.exceptions import DimensionMismatchError


class WeightModel:
    """
    Flat weight container shared by every oracle model.

    Subclasses expose structured views (blocks, coordinate maps) over
    ``weights``. Any mutation goes through ``set_weights`` and bumps
    ``version`` so cached statistics can detect staleness.
    """

    def __init__(self, dimension: int, weights: np.ndarray | None = None):
        self.dimension = dimension
        self._weights = np.zeros(dimension)
        self.version = 0
        if weights is not None:
            self.set_weights(weights)

    @property
    def weights(self) -> np.ndarray:
        view = self._weights.view()
        view.flags.writeable = False
        return view

    def set_weights(self, weights: np.ndarray) -> None:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (self.dimension,):
            raise DimensionMismatchError(
                "weight vector has wrong shape",
                expected=self.dimension,
                got=weights.shape,
            )
        self._weights = weights.copy()
        self.version += 1
