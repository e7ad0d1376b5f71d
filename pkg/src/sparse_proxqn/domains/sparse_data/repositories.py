"""
File-backed loaders and writers for the three supported corpora.

  - OCR letter data: tab-separated ``id, letter, next_id, word_id, position,
    fold, pixel_0 .. pixel_{P-1}``; ``next_id == -1`` closes a word.
  - svmlight: ``label j:v j:v ...`` with optional ``# comment``. Indices are
    one-based unless an index 0 occurs anywhere in the file, in which case
    the whole file is read as zero-based.
  - hierarchy: one ``parent child`` integer pair per line.
"""

import string
from pathlib import Path

import numpy as np

from sparse_proxqn.core.exceptions import DataFormatError, LabelError
from sparse_proxqn.core.logging import get_logger

from .features import expand_degree2_features, expanded_dimension
from .models import (
    BinaryDataset,
    FeatureIndexedMatrix,
    SequenceDataset,
    Taxonomy,
    TaxonomyDataset,
)

log = get_logger("data")

OCR_META_COLUMNS = 6
OCR_PIXELS = 128
OCR_LETTERS = string.ascii_lowercase


# =================================
# OCR
# =================================
def load_ocr(
    path: str | Path,
    *,
    num_pixels: int = OCR_PIXELS,
    num_labels: int | None = None,
) -> SequenceDataset:
    """
    Load letter data and reassemble words in file order.

    Letters map a..z to 0..25. The label alphabet is ``num_labels`` when
    given, otherwise all 26 letters, so files holding different letters
    give models of the same dimension.
    """
    path = Path(path)
    expected_cols = OCR_META_COLUMNS + num_pixels
    rows: list[np.ndarray] = []
    labels: list[int] = []
    folds: list[int] = []
    offsets = [0]
    open_word = False
    line_number = 0

    with path.open(encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != expected_cols:
                raise DataFormatError(
                    f"expected {expected_cols} columns, got {len(cols)}",
                    path=path,
                    line_number=line_number,
                )
            letter = cols[1].strip()
            if len(letter) != 1 or letter not in OCR_LETTERS:
                raise DataFormatError(
                    f"unknown letter {letter!r}", path=path, line_number=line_number
                )
            try:
                next_id = int(cols[2])
                fold = int(cols[5])
                pixels = np.asarray([int(v) for v in cols[OCR_META_COLUMNS:]], dtype=np.int8)
            except ValueError as e:
                raise DataFormatError(str(e), path=path, line_number=line_number) from e
            if np.any((pixels != 0) & (pixels != 1)):
                raise DataFormatError(
                    "pixel values must be 0 or 1", path=path, line_number=line_number
                )

            rows.append(expand_degree2_features(pixels))
            labels.append(OCR_LETTERS.index(letter))
            if not open_word:
                folds.append(fold)
            open_word = True
            if next_id == -1:
                offsets.append(len(rows))
                open_word = False

    if open_word:
        raise DataFormatError("last word is not terminated", path=path, line_number=line_number)

    observed = (max(labels) + 1) if labels else 0
    alphabet = num_labels if num_labels is not None else len(OCR_LETTERS)
    if observed > alphabet:
        raise LabelError("letter outside label alphabet", observed=observed, alphabet=alphabet)

    num_features = expanded_dimension(num_pixels)
    features = FeatureIndexedMatrix.from_rows(
        [(idx, np.ones(idx.size)) for idx in rows], num_features
    )
    dataset = SequenceDataset(
        feature_index=features,
        labels=np.asarray(labels, dtype=np.int64),
        offsets=np.asarray(offsets, dtype=np.int64),
        label_alphabet_size=alphabet,
        raw_feature_count=num_features,
        label_names=list(OCR_LETTERS[:alphabet]),
        folds=np.asarray(folds, dtype=np.int64),
    )
    log.info(
        "loaded {} words, {} positions, J={} from {}",
        dataset.num_instances,
        dataset.num_positions,
        num_features,
        path.name,
    )
    return dataset


def write_ocr(words: list[tuple[np.ndarray, np.ndarray]], path: str | Path) -> None:
    """Write words given as (pixels[T, P], labels[T]) pairs in the OCR layout."""
    path = Path(path)
    letter_id = 0
    with path.open("w", encoding="utf-8") as fh:
        for word_id, (pixels, labels) in enumerate(words):
            for t, (row, y) in enumerate(zip(pixels, labels)):
                letter_id += 1
                next_id = -1 if t == len(labels) - 1 else letter_id + 1
                cols = [
                    str(letter_id),
                    OCR_LETTERS[int(y)],
                    str(next_id),
                    str(word_id),
                    str(t + 1),
                    str(word_id % 10),
                    *(str(int(v)) for v in row),
                ]
                fh.write("\t".join(cols) + "\n")


# =================================
# svmlight
# =================================
def _parse_svmlight(path: Path) -> tuple[list[str], list[np.ndarray], list[np.ndarray], bool]:
    labels: list[str] = []
    indices: list[np.ndarray] = []
    values: list[np.ndarray] = []
    saw_zero = False
    with path.open(encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(tokens[0])
            idx = np.empty(len(tokens) - 1, dtype=np.int64)
            val = np.empty(len(tokens) - 1, dtype=np.float64)
            for n, token in enumerate(tokens[1:]):
                key, sep, raw = token.partition(":")
                if not sep:
                    raise DataFormatError(
                        f"malformed pair {token!r}", path=path, line_number=line_number
                    )
                try:
                    idx[n], val[n] = int(key), float(raw)
                except ValueError as e:
                    raise DataFormatError(str(e), path=path, line_number=line_number) from e
            if idx.size != np.unique(idx).size:
                raise DataFormatError(
                    "duplicate feature index", path=path, line_number=line_number
                )
            if idx.size and idx.min() < 0:
                raise DataFormatError(
                    "negative feature index", path=path, line_number=line_number
                )
            saw_zero = saw_zero or bool(np.any(idx == 0))
            keep = val != 0
            order = np.argsort(idx[keep])
            indices.append(idx[keep][order])
            values.append(val[keep][order])
    return labels, indices, values, saw_zero


def _svmlight_features(
    indices: list[np.ndarray],
    values: list[np.ndarray],
    zero_based: bool,
    num_features: int | None,
) -> FeatureIndexedMatrix:
    if not zero_based:
        indices = [idx - 1 for idx in indices]
    inferred = max((int(idx.max()) + 1 for idx in indices if idx.size), default=0)
    if num_features is None:
        num_features = inferred
    elif inferred > num_features:
        raise DataFormatError(
            "feature index exceeds declared feature count",
            inferred=inferred,
            num_features=num_features,
        )
    return FeatureIndexedMatrix.from_rows(list(zip(indices, values)), num_features)


def svmlight_zero_based(path: str | Path) -> bool:
    """True when some feature index in the file is 0, the base the loaders infer otherwise."""
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            for token in line.split("#", 1)[0].split()[1:]:
                key = token.partition(":")[0]
                if key.isdigit() and int(key) == 0:
                    return True
    return False


def load_svmlight_binary(
    path: str | Path,
    *,
    num_features: int | None = None,
    zero_based: bool | None = None,
) -> BinaryDataset:
    """svmlight file with labels in {-1, +1} (0 is read as -1)."""
    path = Path(path)
    raw_labels, indices, values, saw_zero = _parse_svmlight(path)
    try:
        labels = np.asarray([float(v) for v in raw_labels])
    except ValueError as e:
        raise LabelError(f"non-numeric label: {e}") from e
    labels = np.where(labels == 0, -1.0, labels)
    if np.any((labels != 1) & (labels != -1)):
        raise LabelError("binary labels must be in {-1, +1}")
    features = _svmlight_features(
        indices, values, saw_zero if zero_based is None else zero_based, num_features
    )
    log.info("loaded {} samples, J={} from {}", labels.size, features.num_features, path.name)
    return BinaryDataset(features, labels)


def write_svmlight(
    path: str | Path, features: FeatureIndexedMatrix, labels: np.ndarray
) -> None:
    """Write one-based svmlight lines, using ``repr`` so values round-trip exactly."""
    csr = features.csr
    with Path(path).open("w", encoding="utf-8") as fh:
        for i, label in enumerate(labels):
            lo, hi = csr.indptr[i], csr.indptr[i + 1]
            pairs = " ".join(
                f"{j + 1}:{float(v)!r}" for j, v in zip(csr.indices[lo:hi], csr.data[lo:hi])
            )
            head = str(int(label)) if float(label).is_integer() else repr(float(label))
            fh.write(f"{head} {pairs}".rstrip() + "\n")


# =================================
# Taxonomy
# =================================
def load_hierarchy(path: str | Path) -> Taxonomy:
    path = Path(path)
    edges: list[tuple[int, int]] = []
    with path.open(encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise DataFormatError(
                    "expected 'parent child'", path=path, line_number=line_number
                )
            try:
                edges.append((int(parts[0]), int(parts[1])))
            except ValueError as e:
                raise DataFormatError(str(e), path=path, line_number=line_number) from e
    return Taxonomy.from_edges(edges)


def write_hierarchy(path: str | Path, tree: Taxonomy) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for child in tree.order[1:]:
            par = tree.parent[child]
            fh.write(f"{tree.class_ids[par]} {tree.class_ids[child]}\n")


def minmax_scale(features: FeatureIndexedMatrix) -> FeatureIndexedMatrix:
    """Scale nonnegative features to [0, 1] per feature by dividing by the column max."""
    csc = features.to_csc()
    if csc.nnz and csc.data.min() < 0:
        raise DataFormatError("min-max scaling needs nonnegative feature values")
    col_max = np.asarray(csc.max(axis=0).todense()).ravel()
    factors = np.divide(1.0, col_max, out=np.ones_like(col_max), where=col_max > 0)
    return features.scaled(factors)


def load_svmlight_with_taxonomy(
    data_path: str | Path,
    hierarchy_path: str | Path,
    *,
    num_features: int | None = None,
    zero_based: bool | None = None,
    scale: bool = False,
) -> TaxonomyDataset:
    tree = load_hierarchy(hierarchy_path)
    dense = {cid: k for k, cid in enumerate(tree.class_ids)}
    data_path = Path(data_path)
    raw_labels, indices, values, saw_zero = _parse_svmlight(data_path)

    labels = np.empty(len(raw_labels), dtype=np.int64)
    for i, raw in enumerate(raw_labels):
        try:
            cid = int(raw)
        except ValueError as e:
            raise LabelError(f"non-integer class label {raw!r}", instance=i) from e
        if cid not in dense:
            raise LabelError("label not found in hierarchy", class_id=cid, instance=i)
        if not tree.is_leaf(dense[cid]):
            raise LabelError("label is not a leaf", class_id=cid, instance=i)
        labels[i] = dense[cid]

    features = _svmlight_features(
        indices, values, saw_zero if zero_based is None else zero_based, num_features
    )
    if scale:
        features = minmax_scale(features)
    dataset = TaxonomyDataset(features, labels, tree)
    log.info(
        "loaded {} samples, K={} classes, {} leaves, J={}",
        dataset.num_instances,
        tree.num_classes,
        tree.num_leaves,
        dataset.num_features,
    )
    return dataset
