"""Seeded desk-scale generators for the three tasks."""

import numpy as np
import scipy.sparse as sp

from .models import (
    BinaryDataset,
    FeatureIndexedMatrix,
    SequenceDataset,
    Taxonomy,
    TaxonomyDataset,
)


def make_logistic(
    num_instances: int = 200,
    num_features: int = 50,
    *,
    support_fraction: float = 0.2,
    noise: float = 0.5,
    correlation: float = 0.0,
    seed: int = 0,
) -> tuple[BinaryDataset, np.ndarray]:
    """
    Gaussian design with a sparse ground-truth weight vector; returns
    (data, w_true). ``correlation`` in [0, 1) mixes a shared factor into every
    column so that all feature pairs have that correlation.
    """
    if not 0.0 <= correlation < 1.0:
        raise ValueError(f"correlation must be in [0, 1), got {correlation}")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((num_instances, num_features))
    w_true = np.zeros(num_features)
    support_size = max(1, int(round(support_fraction * num_features)))
    support = rng.choice(num_features, size=support_size, replace=False)
    w_true[np.sort(support)] = rng.uniform(1.0, 2.0, support.size) * rng.choice([-1.0, 1.0], support.size)
    margin_noise = noise * rng.standard_normal(num_instances)
    if correlation > 0:
        shared = rng.standard_normal((num_instances, 1))
        x = np.sqrt(1.0 - correlation) * x + np.sqrt(correlation) * shared
    margin = x @ w_true + margin_noise
    labels = np.where(margin >= 0, 1.0, -1.0)
    return BinaryDataset(FeatureIndexedMatrix.from_dense(x), labels), w_true


def sample_chain_words(
    num_sequences: int,
    length: int,
    num_labels: int,
    num_pixels: int,
    *,
    seed: int = 0,
    stickiness: float = 0.6,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Words as (binary pixels[T, P], labels[T]) from a sticky label chain with per-label pixel rates."""
    rng = np.random.default_rng(seed)
    rates = rng.uniform(0.1, 0.7, size=(num_labels, num_pixels))
    words = []
    for _ in range(num_sequences):
        labels = np.empty(length, dtype=np.int64)
        labels[0] = rng.integers(num_labels)
        for t in range(1, length):
            labels[t] = labels[t - 1] if rng.random() < stickiness else rng.integers(num_labels)
        pixels = (rng.random((length, num_pixels)) < rates[labels]).astype(np.int8)
        words.append((pixels, labels))
    return words


def make_chain(
    num_sequences: int = 50,
    length: int = 5,
    num_labels: int = 3,
    num_features: int = 20,
    *,
    seed: int = 0,
) -> SequenceDataset:
    """Chain data over raw binary features; feature 0 is an always-on bias."""
    words = sample_chain_words(num_sequences, length, num_labels, num_features - 1, seed=seed)
    pixels = np.vstack([w[0] for w in words])
    design = np.hstack([np.ones((pixels.shape[0], 1)), pixels])
    offsets = np.concatenate([[0], np.cumsum([len(w[1]) for w in words])]).astype(np.int64)
    return SequenceDataset(
        feature_index=FeatureIndexedMatrix(sp.csr_matrix(design)),
        labels=np.concatenate([w[1] for w in words]),
        offsets=offsets,
        label_alphabet_size=num_labels,
        raw_feature_count=num_features,
        label_names=[chr(ord("a") + y) for y in range(num_labels)],
    )


def make_tree(branching: int = 3, depth: int = 2) -> Taxonomy:
    """Complete ``branching``-ary tree of the given depth rooted at class 0."""
    parent = [-1]
    frontier = [0]
    for _ in range(depth):
        nxt = []
        for node in frontier:
            for _ in range(branching):
                parent.append(node)
                nxt.append(len(parent) - 1)
        frontier = nxt
    return Taxonomy(parent)


def make_taxonomy(
    num_instances: int = 100,
    num_features: int = 10,
    *,
    branching: int = 3,
    depth: int = 2,
    density: float = 0.4,
    seed: int = 0,
) -> TaxonomyDataset:
    """Nonnegative sparse features whose rates depend on the leaf label."""
    rng = np.random.default_rng(seed)
    tree = make_tree(branching, depth)
    rates = rng.uniform(0.5 * density, min(1.0, 1.5 * density), size=(tree.num_leaves, num_features))
    slots = rng.integers(tree.num_leaves, size=num_instances)
    mask = rng.random((num_instances, num_features)) < rates[slots]
    x = np.where(mask, rng.uniform(0.1, 1.0, size=mask.shape), 0.0)
    return TaxonomyDataset(FeatureIndexedMatrix.from_dense(x), tree.leaves[slots].copy(), tree)
