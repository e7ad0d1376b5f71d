from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from sparse_proxqn.core.exceptions import DataFormatError, HierarchyError, LabelError


# =================================
# SparseVector
# =================================
@dataclass(frozen=True)
class SparseVector:
    """Coordinate-sparse vector: sorted unique ``indices`` with matching ``values``."""

    indices: np.ndarray
    values: np.ndarray

    @classmethod
    def from_dense(cls, x: np.ndarray, support: np.ndarray | None = None) -> "SparseVector":
        if support is None:
            support = np.flatnonzero(x)
        support = np.asarray(support, dtype=np.int64)
        return cls(support, np.asarray(x, dtype=np.float64)[support].copy())

    @classmethod
    def empty(cls) -> "SparseVector":
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))

    def dot(self, other: "SparseVector") -> float:
        common, ia, ib = np.intersect1d(
            self.indices, other.indices, assume_unique=True, return_indices=True
        )
        if common.size == 0:
            return 0.0
        return float(self.values[ia] @ other.values[ib])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_dense(self, dim: int) -> np.ndarray:
        out = np.zeros(dim)
        out[self.indices] = self.values
        return out


# =================================
# FeatureIndexedMatrix
# =================================
class FeatureIndexedMatrix:
    """
    Feature-major sparse storage: column ``j`` lists the (instance, value)
    pairs where feature ``j`` is nonzero, sorted by instance id.

    Backed by a CSC matrix of shape (num_instances, num_features). Explicit
    zeros are dropped on construction. ``column_reads`` counts column
    iterations; with ``track_columns`` enabled the set of read columns is kept
    in ``touched_columns``.
    """

    def __init__(self, matrix: sp.spmatrix | sp.sparray, *, track_columns: bool = False):
        csc = sp.csc_matrix(matrix, dtype=np.float64, copy=True)
        csc.sum_duplicates()
        csc.eliminate_zeros()
        csc.sort_indices()
        self._csc = csc
        self.column_reads = 0
        self.track_columns = track_columns
        self.touched_columns: set[int] = set()

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[tuple[Sequence[int], Sequence[float]]],
        num_features: int,
    ) -> "FeatureIndexedMatrix":
        """Build from instance-major rows; a repeated feature within a row is an error."""
        indptr = [0]
        indices: list[np.ndarray] = []
        data: list[np.ndarray] = []
        for i, (idx, val) in enumerate(rows):
            idx = np.asarray(idx, dtype=np.int64)
            val = np.asarray(val, dtype=np.float64)
            if idx.size != np.unique(idx).size:
                raise DataFormatError("duplicate feature index in instance", line_number=i + 1)
            if idx.size and (idx.min() < 0 or idx.max() >= num_features):
                raise DataFormatError("feature index out of range", line_number=i + 1)
            indices.append(idx)
            data.append(val)
            indptr.append(indptr[-1] + idx.size)
        csr = sp.csr_matrix(
            (
                np.concatenate(data) if data else np.empty(0),
                np.concatenate(indices) if indices else np.empty(0, dtype=np.int64),
                np.asarray(indptr, dtype=np.int64),
            ),
            shape=(len(rows), num_features),
        )
        return cls(csr)

    @classmethod
    def from_dense(cls, x: np.ndarray) -> "FeatureIndexedMatrix":
        return cls(sp.csc_matrix(np.asarray(x, dtype=np.float64)))

    @property
    def num_instances(self) -> int:
        return self._csc.shape[0]

    @property
    def num_features(self) -> int:
        return self._csc.shape[1]

    @property
    def nnz(self) -> int:
        return self._csc.nnz

    def column_nnz(self, j: int) -> int:
        return int(self._csc.indptr[j + 1] - self._csc.indptr[j])

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(instance ids, values) of feature ``j``. Views, do not mutate."""
        self.column_reads += 1
        if self.track_columns:
            self.touched_columns.add(int(j))
        lo, hi = self._csc.indptr[j], self._csc.indptr[j + 1]
        return self._csc.indices[lo:hi], self._csc.data[lo:hi]

    def reset_counters(self) -> None:
        self.column_reads = 0
        self.touched_columns.clear()

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """Instance-major view used by full inference passes."""
        return self._csc.tocsr()

    def to_csc(self) -> sp.csc_matrix:
        return self._csc.copy()

    def to_dense(self) -> np.ndarray:
        return self._csc.toarray()

    def take_rows(self, rows: np.ndarray) -> "FeatureIndexedMatrix":
        return FeatureIndexedMatrix(self.csr[np.asarray(rows, dtype=np.int64)])

    def scaled(self, factors: np.ndarray) -> "FeatureIndexedMatrix":
        return FeatureIndexedMatrix(self._csc @ sp.diags(np.asarray(factors, dtype=np.float64)))


# =================================
# Datasets
# =================================
@dataclass
class BinaryDataset:
    """Plain binary classification data, labels in {-1, +1}."""

    features: FeatureIndexedMatrix
    labels: np.ndarray

    @property
    def num_instances(self) -> int:
        return self.features.num_instances

    @property
    def num_features(self) -> int:
        return self.features.num_features

    def subset(self, rows: np.ndarray) -> "BinaryDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return BinaryDataset(self.features.take_rows(rows), self.labels[rows].copy())


@dataclass
class SequenceDataset:
    """
    Label sequences over a shared feature space. Positions of all sequences
    are stacked in file order; ``offsets[i]:offsets[i+1]`` are the rows of
    sequence ``i`` in ``feature_index`` (keyed by (sequence, position)).
    """

    feature_index: FeatureIndexedMatrix
    labels: np.ndarray
    offsets: np.ndarray
    label_alphabet_size: int
    raw_feature_count: int
    label_names: list[str] = field(default_factory=list)
    folds: np.ndarray | None = None

    def __post_init__(self):
        if self.labels.size != self.feature_index.num_instances:
            raise DataFormatError("label count differs from position count")
        if self.labels.size and (
            self.labels.min() < 0 or self.labels.max() >= self.label_alphabet_size
        ):
            raise DataFormatError("label outside alphabet")

    @property
    def num_instances(self) -> int:
        return len(self.offsets) - 1

    @property
    def num_positions(self) -> int:
        return int(self.offsets[-1])

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def sequence_slice(self, i: int) -> slice:
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def subset(self, sequences: np.ndarray) -> "SequenceDataset":
        sequences = np.asarray(sequences, dtype=np.int64)
        rows = (
            np.concatenate([np.arange(self.offsets[i], self.offsets[i + 1]) for i in sequences])
            if sequences.size
            else np.empty(0, dtype=np.int64)
        )
        lengths = self.lengths[sequences]
        return SequenceDataset(
            feature_index=self.feature_index.take_rows(rows),
            labels=self.labels[rows].copy(),
            offsets=np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64),
            label_alphabet_size=self.label_alphabet_size,
            raw_feature_count=self.raw_feature_count,
            label_names=list(self.label_names),
            folds=None if self.folds is None else self.folds[sequences].copy(),
        )


class Taxonomy:
    """
    Rooted class tree over dense ids ``0..K-1``. ``class_ids`` keeps the
    original ids for reporting.
    """

    def __init__(self, parent: Sequence[int], class_ids: Sequence[int] | None = None):
        self.parent = np.asarray(parent, dtype=np.int64)
        k = self.parent.size
        self.class_ids = list(class_ids) if class_ids is not None else list(range(k))
        roots = np.flatnonzero(self.parent < 0)
        if roots.size != 1:
            raise HierarchyError(
                "hierarchy must have exactly one root",
                roots=[self.class_ids[r] for r in roots],
            )
        self.root = int(roots[0])
        self.children: list[list[int]] = [[] for _ in range(k)]
        for child, par in enumerate(self.parent):
            if par >= 0:
                self.children[par].append(child)

        # breadth-first order from the root; unreachable nodes sit on a cycle
        order, queue = [], deque([self.root])
        while queue:
            node = queue.popleft()
            order.append(node)
            queue.extend(self.children[node])
        if len(order) != k:
            raise HierarchyError("hierarchy contains a cycle", reached=len(order), classes=k)
        self.order = np.asarray(order, dtype=np.int64)
        self.leaves = np.asarray(
            [node for node in range(k) if not self.children[node]], dtype=np.int64
        )
        self._leaf_slot = {int(y): i for i, y in enumerate(self.leaves)}
        self.path_cache: dict[int, np.ndarray] = {int(y): self._path(int(y)) for y in self.leaves}

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[int, int]]) -> "Taxonomy":
        edges = list(edges)
        ids = sorted({n for edge in edges for n in edge})
        dense = {cid: i for i, cid in enumerate(ids)}
        parent = np.full(len(ids), -1, dtype=np.int64)
        for par, child in edges:
            c = dense[child]
            if parent[c] >= 0 and parent[c] != dense[par]:
                raise HierarchyError("class has more than one parent", class_id=child)
            if par == child:
                raise HierarchyError("class is its own parent", class_id=child)
            parent[c] = dense[par]
        return cls(parent, ids)

    def _path(self, y: int) -> np.ndarray:
        path = [y]
        while self.parent[path[-1]] >= 0:
            path.append(int(self.parent[path[-1]]))
        return np.asarray(path[::-1], dtype=np.int64)

    @property
    def num_classes(self) -> int:
        return self.parent.size

    @property
    def num_leaves(self) -> int:
        return self.leaves.size

    def is_leaf(self, k: int) -> bool:
        return int(k) in self._leaf_slot

    def leaf_slot(self, y: int) -> int:
        return self._leaf_slot[int(y)]

    def path(self, y: int) -> np.ndarray:
        """Ancestors of leaf ``y`` from the root down to ``y``."""
        return self.path_cache[int(y)]

    @cached_property
    def path_matrix(self) -> np.ndarray:
        """(num_leaves, K) 0/1 matrix, row for leaf slot ``l`` marks Path(leaves[l])."""
        mat = np.zeros((self.num_leaves, self.num_classes))
        for slot, y in enumerate(self.leaves):
            mat[slot, self.path(int(y))] = 1.0
        return mat


@dataclass
class TaxonomyDataset:
    features: FeatureIndexedMatrix
    labels: np.ndarray  # dense leaf class index per instance
    tree: Taxonomy

    def __post_init__(self):
        for y in np.unique(self.labels):
            if not self.tree.is_leaf(int(y)):
                raise LabelError("label is not a leaf", class_id=self.tree.class_ids[int(y)])

    @property
    def num_instances(self) -> int:
        return self.features.num_instances

    @property
    def num_features(self) -> int:
        return self.features.num_features

    @property
    def leaves(self) -> np.ndarray:
        return self.tree.leaves

    @property
    def path_cache(self) -> dict[int, np.ndarray]:
        return self.tree.path_cache

    def subset(self, rows: np.ndarray) -> "TaxonomyDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return TaxonomyDataset(self.features.take_rows(rows), self.labels[rows].copy(), self.tree)
