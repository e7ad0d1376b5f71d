import numpy as np
from scipy.special import expit

from sparse_proxqn.core.base.base_oracle import SmoothLossOracle
from sparse_proxqn.domains.sparse_data.models import (
    BinaryDataset,
    SequenceDataset,
    TaxonomyDataset,
)

from .inference import (
    chain_log_partition,
    chain_messages,
    chain_score,
    tree_posterior,
    viterbi_decode,
)
from .models import HierModel, LogisticModel, SeqCrfModel


# =================================
# LogisticOracle
# =================================
class LogisticOracle(SmoothLossOracle[BinaryDataset, LogisticModel]):
    """sum_i log(1 + exp(-y_i w^T x_i)) over +-1 labels."""

    name = "logistic"

    def __init__(self, dataset: BinaryDataset, *, threads: int = 1):
        super().__init__(dataset, LogisticModel(dataset.num_features), threads=threads)
        self._coef: np.ndarray | None = None

    @property
    def num_samples(self) -> int:
        return self.dataset.num_instances

    def _margins(self, w: np.ndarray) -> np.ndarray:
        return self.dataset.labels * (self.dataset.features.csr @ w)

    def _infer(self) -> float:
        margins = self._margins(self.model.weights)
        # d loss / d (w^T x_i)
        self._coef = -self.dataset.labels * expit(-margins)
        return float(np.logaddexp(0.0, -margins).sum())

    def _partial(self, j: int) -> float:
        rows, values = self.dataset.features.column(j)
        return float(self._coef[rows] @ values)

    def _full_gradient(self) -> np.ndarray:
        return np.asarray(self.dataset.features.csr.T @ self._coef)

    def _loss(self, w: np.ndarray) -> float:
        return float(np.logaddexp(0.0, -self._margins(w)).sum())

    def predict(self, dataset: BinaryDataset) -> np.ndarray:
        scores = dataset.features.csr @ self.model.weights
        return np.where(scores >= 0, 1.0, -1.0)


# =================================
# SeqCrfOracle
# =================================
class SeqCrfOracle(SmoothLossOracle[SequenceDataset, SeqCrfModel]):
    """
    Negative conditional log-likelihood of a linear-chain CRF with unigram
    features Theta_y^T x_t and label-bigram weights Lambda.
    """

    name = "seq"

    def __init__(self, dataset: SequenceDataset, *, threads: int = 1):
        model = SeqCrfModel(dataset.label_alphabet_size, dataset.feature_index.num_features)
        super().__init__(dataset, model, threads=threads)
        num_labels = dataset.label_alphabet_size
        self._gold = dataset.labels
        self._gold_onehot = np.eye(num_labels)[self._gold]
        self._edge_empirical = np.zeros((num_labels, num_labels))
        for i in range(dataset.num_instances):
            labels = self._gold[dataset.sequence_slice(i)]
            np.add.at(self._edge_empirical, (labels[:-1], labels[1:]), 1.0)
        self._node_marginals: np.ndarray | None = None
        self._edge_expected: np.ndarray | None = None

    @property
    def num_samples(self) -> int:
        return self.dataset.num_instances

    def _node_scores(self, theta: np.ndarray) -> np.ndarray:
        return np.asarray(self.dataset.feature_index.csr @ theta.T)

    def _infer(self) -> float:
        theta, transition = self.model.blocks()
        node_scores = self._node_scores(theta)
        slices = [self.dataset.sequence_slice(i) for i in range(self.dataset.num_instances)]

        def one(sl: slice):
            messages = chain_messages(node_scores[sl], transition)
            gold = chain_score(node_scores[sl], transition, self._gold[sl])
            return messages, messages.log_z - gold

        results = self._map(one, slices)
        num_labels = self.model.num_labels
        self._node_marginals = np.zeros((self.dataset.num_positions, num_labels))
        self._edge_expected = np.zeros((num_labels, num_labels))
        loss = 0.0
        for sl, (messages, nll) in zip(slices, results):
            self._node_marginals[sl] = messages.node_marginals
            self._edge_expected += messages.edge_marginals.sum(axis=0)
            loss += nll
        return loss

    def _partial(self, j: int) -> float:
        if j < self.model.unigram_size:
            y, feature = divmod(j, self.model.num_features)
            rows, values = self.dataset.feature_index.column(feature)
            residual = self._node_marginals[rows, y] - (self._gold[rows] == y)
            return float(residual @ values)
        y_prev, y = divmod(j - self.model.unigram_size, self.model.num_labels)
        return float(self._edge_expected[y_prev, y] - self._edge_empirical[y_prev, y])

    def _full_gradient(self) -> np.ndarray:
        residual = self._node_marginals - self._gold_onehot
        unigram = np.asarray(self.dataset.feature_index.csr.T @ residual).T
        bigram = self._edge_expected - self._edge_empirical
        return np.concatenate((unigram.ravel(), bigram.ravel()))

    def _loss(self, w: np.ndarray) -> float:
        theta, transition = self.model.blocks(w)
        node_scores = self._node_scores(theta)

        def one(i: int) -> float:
            sl = self.dataset.sequence_slice(i)
            log_z = chain_log_partition(node_scores[sl], transition)
            return log_z - chain_score(node_scores[sl], transition, self._gold[sl])

        return float(sum(self._map(one, range(self.dataset.num_instances))))

    def predict(self, dataset: SequenceDataset) -> np.ndarray:
        """Viterbi labels for every position of ``dataset``, stacked in order."""
        theta, transition = self.model.blocks()
        node_scores = np.asarray(dataset.feature_index.csr @ theta.T)
        if dataset.num_positions == 0:
            return np.empty(0, dtype=np.int64)
        return np.concatenate(
            [
                viterbi_decode(node_scores[dataset.sequence_slice(i)], transition)
                for i in range(dataset.num_instances)
            ]
        )


# =================================
# HierOracle
# =================================
class HierOracle(SmoothLossOracle[TaxonomyDataset, HierModel]):
    """
    Negative log-likelihood of a taxonomy model where leaf y has potential
    exp(sum_{k in Path(y)} w_k^T x).
    """

    name = "hier"

    def __init__(self, dataset: TaxonomyDataset, *, threads: int = 1):
        super().__init__(dataset, HierModel(dataset.tree, dataset.num_features), threads=threads)
        tree = dataset.tree
        slots = np.asarray([tree.leaf_slot(y) for y in dataset.labels], dtype=np.int64)
        self._gold_slot = slots
        # 1[k in Path(y_i)], (N, K)
        self._path_indicator = tree.path_matrix[slots] if slots.size else np.zeros((0, tree.num_classes))
        self._beta: np.ndarray | None = None

    @property
    def num_samples(self) -> int:
        return self.dataset.num_instances

    def _posterior(self, w: np.ndarray):
        scores = np.asarray(self.dataset.features.csr @ self.model.matrix(w).T)
        chunks = np.array_split(np.arange(scores.shape[0]), max(1, self.threads))
        parts = self._map(lambda rows: tree_posterior(self.dataset.tree, scores[rows]), chunks)
        return parts, chunks

    def _nll(self, parts, chunks) -> float:
        loss = 0.0
        for part, rows in zip(parts, chunks):
            gold_alpha = part.alpha[np.arange(rows.size), self.dataset.tree.leaves[self._gold_slot[rows]]]
            loss += float((part.log_z - gold_alpha).sum())
        return loss

    def _infer(self) -> float:
        parts, chunks = self._posterior(self.model.weights)
        self._beta = np.vstack([part.beta for part in parts])
        return self._nll(parts, chunks)

    def _partial(self, j: int) -> float:
        k, feature = divmod(j, self.model.num_features)
        rows, values = self.dataset.features.column(feature)
        residual = self._beta[rows, k] - self._path_indicator[rows, k]
        return float(residual @ values)

    def _full_gradient(self) -> np.ndarray:
        residual = self._beta - self._path_indicator
        return np.asarray(self.dataset.features.csr.T @ residual).T.ravel()

    def _loss(self, w: np.ndarray) -> float:
        parts, chunks = self._posterior(w)
        return self._nll(parts, chunks)

    def predict(self, dataset: TaxonomyDataset) -> np.ndarray:
        """Dense class index of the most probable leaf per instance."""
        scores = np.asarray(dataset.features.csr @ self.model.matrix().T)
        tree = self.model.tree
        posterior = tree_posterior(tree, np.atleast_2d(scores).reshape(-1, tree.num_classes))
        return tree.leaves[np.argmax(posterior.leaf_posterior, axis=1)]
