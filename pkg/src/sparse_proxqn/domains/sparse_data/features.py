"""
Degree-2 expansion of binary pixel vectors.

Index layout for ``P`` raw pixels (``J = P(P-1)/2 + P + 1`` slots):

    0                      bias, always 1
    1 + p                  singleton pixel p, 0 <= p < P
    pair_offset(p) + q     pair (p, q) with p < q, row-major over p then q

so pairs start at ``1 + P`` with (0, 1), (0, 2), ..., (0, P-1), (1, 2), ...
The layout is fixed so that model coordinates are stable across runs.
"""

import numpy as np

from sparse_proxqn.core.exceptions import DataFormatError


def expanded_dimension(num_pixels: int) -> int:
    return num_pixels * (num_pixels - 1) // 2 + num_pixels + 1


def pair_offset(p: int, num_pixels: int) -> int:
    return 1 + num_pixels + p * num_pixels - p * (p + 1) // 2 - p - 1


def pair_index(p: int, q: int, num_pixels: int) -> int:
    if not 0 <= p < q < num_pixels:
        raise ValueError(f"pair ({p}, {q}) outside 0 <= p < q < {num_pixels}")
    return pair_offset(p, num_pixels) + q


def expand_degree2_features(pixels: np.ndarray) -> np.ndarray:
    """Sorted indices of the active expanded features for one binary pixel vector."""
    pixels = np.asarray(pixels)
    num_pixels = pixels.size
    if num_pixels < 1:
        raise DataFormatError("pixel vector must be non-empty")
    on = np.flatnonzero(pixels)
    p, q = np.triu_indices(on.size, k=1)
    p, q = on[p], on[q]
    pairs = 1 + num_pixels + p * num_pixels - p * (p + 1) // 2 - p - 1 + q
    return np.concatenate(([0], 1 + on, pairs)).astype(np.int64)
