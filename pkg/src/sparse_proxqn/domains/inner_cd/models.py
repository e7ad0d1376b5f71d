from dataclasses import dataclass

import numpy as np

from sparse_proxqn.domains.sparse_data.models import SparseVector


@dataclass
class InnerDirection:
    """
    Search direction over the working set.

    ``d[i]`` is the step for coordinate ``coords[i]``; ``d_hat`` tracks
    ``Qhat d`` and ``delta_model`` is ``g^T d + lambda(|w+d|_1 - |w|_1)``.
    """

    coords: np.ndarray
    d: np.ndarray
    d_hat: np.ndarray
    delta_model: float
    sweeps: int = 0

    @property
    def is_zero(self) -> bool:
        return not np.any(self.d)

    def to_sparse(self) -> SparseVector:
        return SparseVector(self.coords, self.d.copy())

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        out[self.coords] = self.d
        return out
