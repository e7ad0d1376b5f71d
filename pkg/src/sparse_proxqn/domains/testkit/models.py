from dataclasses import dataclass, field

import numpy as np


@dataclass
class SeqEnumeration:
    """Exact quantities for one chain, summed over every labeling."""

    log_z: float
    node_marginals: np.ndarray  # (T, |Y|)
    edge_marginals: np.ndarray  # (T-1, |Y|, |Y|)
    expected_features: np.ndarray  # (d,)
    gradient: np.ndarray | None = None  # E[phi] - phi(gold), when gold is given
    nll: float | None = None


@dataclass
class HierEnumeration:
    leaves: np.ndarray
    log_z: float
    leaf_posterior: np.ndarray  # aligned with ``leaves``
    beta: np.ndarray  # (K,)
    gradient: np.ndarray | None = None
    nll: float | None = None


@dataclass
class DenseBfgs:
    """
    Explicit BFGS matrix over the last ``memory`` accepted pairs, rebuilt from
    ``gamma * I`` with gamma taken from the newest pair.
    """

    dim: int
    memory: int = 10
    curvature_floor: float = 1e-12
    pairs: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    gammas: list[float] = field(default_factory=list)

    @property
    def gamma(self) -> float:
        return self.gammas[-1] if self.gammas else 1.0
