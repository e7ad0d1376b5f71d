from typing import Protocol, TypeVar

import numpy as np

from sparse_proxqn.core.exceptions import ManifestError


class _Subsettable(Protocol):
    @property
    def num_instances(self) -> int: ...

    def subset(self, rows: np.ndarray): ...


TDataset = TypeVar("TDataset", bound=_Subsettable)


def train_test_split(dataset: TDataset, fraction: float, seed: int = 0) -> tuple[TDataset, TDataset]:
    """
    Random split by instance (sequence for chain data). ``fraction`` is the
    training share; both parts keep the original relative order.
    """
    if not 0.0 < fraction < 1.0:
        raise ManifestError("split fraction must lie in (0, 1)", fraction=fraction)
    n = dataset.num_instances
    perm = np.random.default_rng(seed).permutation(n)
    cut = int(round(fraction * n))
    train_rows, test_rows = np.sort(perm[:cut]), np.sort(perm[cut:])
    return dataset.subset(train_rows), dataset.subset(test_rows)
