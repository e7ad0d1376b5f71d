"""
Brute-force reference computations.

Nothing here goes through the forward-backward, downward-upward or compact
L-BFGS code; every quantity is summed or updated explicitly.
"""

import itertools
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from sparse_proxqn.core.exceptions import InstanceTooLargeError
from sparse_proxqn.domains.sparse_data.models import SequenceDataset, TaxonomyDataset

from .models import DenseBfgs, HierEnumeration, SeqEnumeration

MAX_SEQ_LABELINGS = 10_000
MAX_LEAVES = 1_000


def _dense(x) -> np.ndarray:
    return x.toarray() if sp.issparse(x) else np.atleast_2d(np.asarray(x, dtype=np.float64))


def _log_normalize(scores: np.ndarray) -> tuple[float, np.ndarray]:
    top = scores.max()
    weights = np.exp(scores - top)
    total = weights.sum()
    return float(top + np.log(total)), weights / total


# =================================
# Chains
# =================================
def seq_features(labels: Sequence[int], x, num_labels: int) -> np.ndarray:
    """Sufficient statistics phi(y, x) in the flat chain layout."""
    x = _dense(x)
    num_features = x.shape[1]
    phi = np.zeros(num_labels * num_features + num_labels * num_labels)
    for t, y in enumerate(labels):
        phi[y * num_features : (y + 1) * num_features] += x[t]
        if t > 0:
            phi[num_labels * num_features + labels[t - 1] * num_labels + y] += 1.0
    return phi


def _labelings(length: int, num_labels: int) -> list[tuple[int, ...]]:
    if num_labels**length > MAX_SEQ_LABELINGS:
        raise InstanceTooLargeError(
            "too many labelings to enumerate", labelings=num_labels**length
        )
    return list(itertools.product(range(num_labels), repeat=length))


def enumerate_seq(
    theta: np.ndarray, transition: np.ndarray, x, gold: Sequence[int] | None = None
) -> SeqEnumeration:
    """
    Sum the chain potential over all |Y|^T labelings of one sequence.

    ``theta`` is (|Y|, J), ``transition`` is (|Y|, |Y|), ``x`` is (T, J).
    """
    x = _dense(x)
    length = x.shape[0]
    num_labels = theta.shape[0]
    labelings = _labelings(length, num_labels)
    phis = np.array([seq_features(lab, x, num_labels) for lab in labelings])
    w = np.concatenate((theta.ravel(), transition.ravel()))
    log_z, probs = _log_normalize(phis @ w)

    node = np.zeros((length, num_labels))
    edge = np.zeros((max(length - 1, 0), num_labels, num_labels))
    for p, lab in zip(probs, labelings):
        node[np.arange(length), lab] += p
        for t in range(1, length):
            edge[t - 1, lab[t - 1], lab[t]] += p
    expected = probs @ phis

    result = SeqEnumeration(log_z, node, edge, expected)
    if gold is not None:
        phi_gold = seq_features(list(gold), x, num_labels)
        result.gradient = expected - phi_gold
        result.nll = log_z - float(phi_gold @ w)
    return result


# =================================
# Taxonomies
# =================================
def _leaf_paths(parent: np.ndarray) -> dict[int, list[int]]:
    has_child = np.zeros(parent.size, dtype=bool)
    has_child[parent[parent >= 0]] = True
    paths = {}
    for y in np.flatnonzero(~has_child):
        path, node = [], int(y)
        while node >= 0:
            path.append(node)
            node = int(parent[node])
        paths[int(y)] = path
    return paths


def enumerate_hier(
    weights: np.ndarray, parent: np.ndarray, x, gold: int | None = None
) -> HierEnumeration:
    """
    Softmax over leaves of ``sum_{k in Path(y)} w_k^T x`` for one instance.

    ``weights`` is (K, J) and ``parent`` holds -1 at the root.
    """
    parent = np.asarray(parent, dtype=np.int64)
    x = _dense(x).ravel()
    paths = _leaf_paths(parent)
    if len(paths) > MAX_LEAVES:
        raise InstanceTooLargeError("too many leaves to enumerate", leaves=len(paths))
    leaves = np.asarray(sorted(paths), dtype=np.int64)
    class_scores = weights @ x
    log_z, posterior = _log_normalize(
        np.array([class_scores[paths[int(y)]].sum() for y in leaves])
    )
    beta = np.zeros(parent.size)
    for y, p in zip(leaves, posterior):
        beta[paths[int(y)]] += p

    result = HierEnumeration(leaves, log_z, posterior, beta)
    if gold is not None:
        indicator = np.zeros(parent.size)
        indicator[paths[int(gold)]] = 1.0
        result.gradient = np.outer(beta - indicator, x).ravel()
        result.nll = log_z - float(class_scores[paths[int(gold)]].sum())
    return result


# =================================
# Dense BFGS
# =================================
def dense_bfgs_push(state: DenseBfgs, s: np.ndarray, y: np.ndarray) -> bool:
    """Record (s, y) when it passes the curvature test; keep the last ``memory`` pairs."""
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sy = float(s @ y)
    if not np.any(s) or not sy > state.curvature_floor * np.linalg.norm(s) * np.linalg.norm(y):
        return False
    state.pairs.append((s.copy(), y.copy()))
    state.gammas.append(sy / float(s @ s))
    if len(state.pairs) > state.memory:
        state.pairs.pop(0)
        state.gammas.pop(0)
    return True


def dense_bfgs_matrix(state: DenseBfgs) -> np.ndarray:
    """Apply the BFGS recursion to ``gamma * I`` over the retained pairs, oldest first."""
    b = state.gamma * np.eye(state.dim)
    for s, y in state.pairs:
        bs = b @ s
        b = b - np.outer(bs, bs) / float(s @ bs) + np.outer(y, y) / float(y @ s)
    return b


# =================================
# Subproblem
# =================================
def exact_subproblem_solve(
    g: np.ndarray,
    w: np.ndarray,
    b: np.ndarray,
    lam: float,
    *,
    tol: float = 1e-14,
    max_sweeps: int = 1_000_000,
) -> np.ndarray:
    """
    Minimize ``g^T d + 0.5 d^T B d + lam*|w + d|_1`` by cyclic coordinate
    descent until no coordinate moves by more than ``tol``.
    """
    g = np.asarray(g, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    d = np.zeros_like(g)
    bd = np.zeros_like(g)
    for _ in range(max_sweeps):
        largest = 0.0
        for j in range(g.size):
            a = b[j, j]
            c = w[j] + d[j]
            u = c - (g[j] + bd[j]) / a
            z = -c + np.sign(u) * max(abs(u) - lam / a, 0.0)
            if z != 0.0:
                d[j] += z
                bd += z * b[:, j]
                largest = max(largest, abs(z))
        if largest <= tol:
            break
    return d


# =================================
# Finite differences
# =================================
def fd_gradient(lossfn: Callable[[np.ndarray], float], w: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences ``(l(w + h e_j) - l(w - h e_j)) / 2h``."""
    if h <= 0:
        raise ValueError("h must be positive")
    w = np.asarray(w, dtype=np.float64)
    grad = np.zeros_like(w)
    for j in range(w.size):
        step = np.zeros_like(w)
        step[j] = h
        grad[j] = (lossfn(w + step) - lossfn(w - step)) / (2.0 * h)
    return grad


def fd_hessian(lossfn: Callable[[np.ndarray], float], w: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Second-order central differences on loss values only."""
    w = np.asarray(w, dtype=np.float64)
    n = w.size
    eye = np.eye(n) * h
    hess = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            value = (
                lossfn(w + eye[i] + eye[j])
                - lossfn(w + eye[i] - eye[j])
                - lossfn(w - eye[i] + eye[j])
                + lossfn(w - eye[i] - eye[j])
            ) / (4.0 * h * h)
            hess[i, j] = hess[j, i] = value
    return hess


# =================================
# Hessian factorization
# =================================
def phi_hessian(features: Sequence[np.ndarray], probs: Sequence[np.ndarray]) -> np.ndarray:
    """
    ``Phi D Phi^T`` where, per instance, each column of Phi is a labeling's
    feature vector minus its expectation and D holds the labeling's
    probability. ``features[i]`` is (L_i, d); ``probs[i]`` is (L_i,).
    """
    dim = features[0].shape[1] if features else 0
    hess = np.zeros((dim, dim))
    for phi, p in zip(features, probs):
        centered = phi - p @ phi
        hess += centered.T @ (p[:, None] * centered)
    return hess


def seq_phi_factor(
    dataset: SequenceDataset, w: np.ndarray, *, max_dim: int = 30, max_columns: int = 1_000
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    num_labels = dataset.label_alphabet_size
    num_features = dataset.feature_index.num_features
    if w.size > max_dim:
        raise InstanceTooLargeError("dimension too large for the dense Hessian", dimension=w.size)
    columns = int(sum(num_labels ** int(t) for t in dataset.lengths))
    if columns > max_columns:
        raise InstanceTooLargeError("too many labelings for the dense Hessian", columns=columns)
    theta = w[: num_labels * num_features].reshape(num_labels, num_features)
    transition = w[num_labels * num_features :].reshape(num_labels, num_labels)
    x_all = dataset.feature_index.to_dense()
    features, probs = [], []
    for i in range(dataset.num_instances):
        x = x_all[dataset.sequence_slice(i)]
        labelings = _labelings(x.shape[0], num_labels)
        phi = np.array([seq_features(lab, x, num_labels) for lab in labelings])
        _, p = _log_normalize(phi @ np.concatenate((theta.ravel(), transition.ravel())))
        features.append(phi)
        probs.append(p)
    return features, probs


def hier_phi_factor(
    dataset: TaxonomyDataset, w: np.ndarray, *, max_dim: int = 30, max_columns: int = 1_000
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    tree = dataset.tree
    num_features = dataset.num_features
    if w.size > max_dim:
        raise InstanceTooLargeError("dimension too large for the dense Hessian", dimension=w.size)
    paths = _leaf_paths(tree.parent)
    leaves = sorted(paths)
    if dataset.num_instances * len(leaves) > max_columns:
        raise InstanceTooLargeError(
            "too many labelings for the dense Hessian",
            columns=dataset.num_instances * len(leaves),
        )
    weights = w.reshape(tree.num_classes, num_features)
    x_all = dataset.features.to_dense()
    features, probs = [], []
    for x in x_all:
        phi = np.zeros((len(leaves), w.size))
        for row, y in enumerate(leaves):
            for k in paths[y]:
                phi[row, k * num_features : (k + 1) * num_features] = x
        _, p = _log_normalize(phi @ weights.ravel())
        features.append(phi)
        probs.append(p)
    return features, probs


def hessian_via_phi(
    dataset: SequenceDataset | TaxonomyDataset,
    w: np.ndarray,
    *,
    max_dim: int = 30,
    max_columns: int = 1_000,
) -> np.ndarray:
    """Loss Hessian assembled from per-labeling feature deviations."""
    w = np.asarray(w, dtype=np.float64)
    if isinstance(dataset, SequenceDataset):
        features, probs = seq_phi_factor(dataset, w, max_dim=max_dim, max_columns=max_columns)
    else:
        features, probs = hier_phi_factor(dataset, w, max_dim=max_dim, max_columns=max_columns)
    return phi_hessian(features, probs)


# =================================
# Convergence rate
# =================================
def superlinear_ratios(
    iterates: Sequence[np.ndarray], w_ref: np.ndarray, *, floor: float = 1e-13
) -> list[float]:
    """
    ``|w_{t+1} - w_ref| / |w_t - w_ref|`` along the iterates; a ratio is
    omitted when its denominator is below ``floor``.
    """
    errors = [float(np.linalg.norm(np.asarray(w) - w_ref)) for w in iterates]
    return [nxt / cur for cur, nxt in zip(errors, errors[1:]) if cur >= floor]
