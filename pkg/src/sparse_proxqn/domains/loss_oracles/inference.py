"""
Exact inference for chains (forward-backward, Viterbi) and taxonomies
(downward-upward). Everything runs in the log domain.
"""

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from sparse_proxqn.domains.sparse_data.models import Taxonomy

from .models import ChainMessages, HierModel, SeqCrfModel, TreePosterior


# =================================
# Chains
# =================================
def chain_messages(node_scores: np.ndarray, transition: np.ndarray) -> ChainMessages:
    """
    Forward-backward over one chain.

    ``node_scores[t, y]`` is Theta_y^T x_t and ``transition[y_prev, y]`` is
    Lambda_{y_prev, y}.
    """
    length, num_labels = node_scores.shape
    log_alpha = np.empty((length, num_labels))
    log_beta = np.zeros((length, num_labels))
    log_alpha[0] = node_scores[0]
    for t in range(1, length):
        log_alpha[t] = node_scores[t] + logsumexp(log_alpha[t - 1][:, None] + transition, axis=0)
    for t in range(length - 2, -1, -1):
        log_beta[t] = logsumexp(transition + (node_scores[t + 1] + log_beta[t + 1])[None, :], axis=1)
    log_z = float(logsumexp(log_alpha[-1]))

    node_marginals = np.exp(log_alpha + log_beta - log_z)
    edge_marginals = np.exp(
        log_alpha[:-1, :, None]
        + transition[None, :, :]
        + (node_scores[1:] + log_beta[1:])[:, None, :]
        - log_z
    )
    return ChainMessages(log_alpha, log_beta, log_z, node_marginals, edge_marginals)


def chain_log_partition(node_scores: np.ndarray, transition: np.ndarray) -> float:
    """Forward pass only."""
    log_alpha = node_scores[0]
    for t in range(1, node_scores.shape[0]):
        log_alpha = node_scores[t] + logsumexp(log_alpha[:, None] + transition, axis=0)
    return float(logsumexp(log_alpha))


def chain_score(node_scores: np.ndarray, transition: np.ndarray, labels: np.ndarray) -> float:
    """Unnormalized log-potential of one labeling."""
    labels = np.asarray(labels, dtype=np.int64)
    unary = node_scores[np.arange(labels.size), labels].sum()
    return float(unary + transition[labels[:-1], labels[1:]].sum())


def viterbi_decode(node_scores: np.ndarray, transition: np.ndarray) -> np.ndarray:
    """Max-product decoding of the most probable labeling."""
    length, num_labels = node_scores.shape
    best = node_scores[0].copy()
    back = np.zeros((length, num_labels), dtype=np.int64)
    for t in range(1, length):
        cand = best[:, None] + transition
        back[t] = np.argmax(cand, axis=0)
        best = node_scores[t] + cand[back[t], np.arange(num_labels)]
    labels = np.empty(length, dtype=np.int64)
    labels[-1] = int(np.argmax(best))
    for t in range(length - 1, 0, -1):
        labels[t - 1] = back[t, labels[t]]
    return labels


def seq_forward_backward(model: SeqCrfModel, x: sp.spmatrix | np.ndarray) -> ChainMessages:
    """Messages of one sequence whose positions are the rows of ``x`` (T x J)."""
    theta, transition = model.blocks()
    node_scores = np.asarray(x @ theta.T)
    return chain_messages(node_scores, transition)


# =================================
# Taxonomies
# =================================
def tree_posterior(tree: Taxonomy, class_scores: np.ndarray) -> TreePosterior:
    """
    Downward-upward pass for a batch of instances.

    ``class_scores[i, k]`` is w_k^T x_i. The downward pass accumulates path
    scores alpha(k) = alpha(parent(k)) + w_k^T x; the leaf posterior is the
    softmax of alpha over leaves; the upward pass sums leaf posteriors into
    every ancestor so that beta(root) = 1.
    """
    class_scores = np.atleast_2d(class_scores)
    alpha = np.empty_like(class_scores, dtype=np.float64)
    alpha[:, tree.root] = class_scores[:, tree.root]
    for k in tree.order[1:]:
        alpha[:, k] = alpha[:, tree.parent[k]] + class_scores[:, k]

    leaf_alpha = alpha[:, tree.leaves]
    log_z = logsumexp(leaf_alpha, axis=1)
    leaf_posterior = np.exp(leaf_alpha - log_z[:, None])

    beta = np.zeros_like(alpha)
    beta[:, tree.leaves] = leaf_posterior
    for k in tree.order[:0:-1]:
        beta[:, tree.parent[k]] += beta[:, k]
    return TreePosterior(alpha, log_z, leaf_posterior, beta)


def hier_downward_upward(model: HierModel, x: sp.spmatrix | np.ndarray) -> TreePosterior:
    """Posterior quantities for the instances in the rows of ``x``."""
    scores = np.asarray(x @ model.matrix().T)
    return tree_posterior(model.tree, np.atleast_2d(scores))
