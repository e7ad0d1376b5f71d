from dataclasses import dataclass

import numpy as np

from sparse_proxqn.core.base.base_model import WeightModel
from sparse_proxqn.domains.sparse_data.models import Taxonomy


class LogisticModel(WeightModel):
    def __init__(self, num_features: int, weights: np.ndarray | None = None):
        self.num_features = num_features
        super().__init__(num_features, weights)


class SeqCrfModel(WeightModel):
    """
    Linear-chain CRF weights ``w = (Theta, Lambda)``.

    Coordinate layout (d = |Y| * J + |Y|^2):
        y * J + j                       unigram Theta[y, j]
        |Y| * J + y_prev * |Y| + y      bigram Lambda[y_prev, y]
    """

    def __init__(self, num_labels: int, num_features: int, weights: np.ndarray | None = None):
        self.num_labels = num_labels
        self.num_features = num_features
        super().__init__(num_labels * num_features + num_labels * num_labels, weights)

    @property
    def unigram_size(self) -> int:
        return self.num_labels * self.num_features

    def blocks(self, w: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """(Theta, Lambda) views of ``w`` (defaults to the stored weights)."""
        w = self.weights if w is None else w
        theta = w[: self.unigram_size].reshape(self.num_labels, self.num_features)
        transition = w[self.unigram_size :].reshape(self.num_labels, self.num_labels)
        return theta, transition

    def unigram_index(self, y: int, j: int) -> int:
        return y * self.num_features + j

    def bigram_index(self, y_prev: int, y: int) -> int:
        return self.unigram_size + y_prev * self.num_labels + y


class HierModel(WeightModel):
    """Class weights ``W`` (K x J) over a taxonomy; coordinate ``k * J + j``."""

    def __init__(self, tree: Taxonomy, num_features: int, weights: np.ndarray | None = None):
        self.tree = tree
        self.num_classes = tree.num_classes
        self.num_features = num_features
        super().__init__(self.num_classes * num_features, weights)

    def matrix(self, w: np.ndarray | None = None) -> np.ndarray:
        w = self.weights if w is None else w
        return w.reshape(self.num_classes, self.num_features)


@dataclass
class ChainMessages:
    """Log-domain forward/backward tables of one sequence plus its marginals."""

    log_alpha: np.ndarray  # (T, |Y|)
    log_beta: np.ndarray  # (T, |Y|)
    log_z: float
    node_marginals: np.ndarray  # (T, |Y|)
    edge_marginals: np.ndarray  # (T-1, |Y|, |Y|), [t, y_prev, y]


@dataclass
class TreePosterior:
    """Downward/upward quantities for a batch of instances (rows)."""

    alpha: np.ndarray  # (N, K) path scores
    log_z: np.ndarray  # (N,)
    leaf_posterior: np.ndarray  # (N, num_leaves)
    beta: np.ndarray  # (N, K) upward sums
