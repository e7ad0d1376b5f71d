from .features import expand_degree2_features, expanded_dimension, pair_index
from .models import (
    BinaryDataset,
    FeatureIndexedMatrix,
    SequenceDataset,
    SparseVector,
    Taxonomy,
    TaxonomyDataset,
)
from .repositories import (
    load_hierarchy,
    load_ocr,
    load_svmlight_binary,
    load_svmlight_with_taxonomy,
    svmlight_zero_based,
)
from .services import train_test_split

__all__ = [
    "BinaryDataset",
    "FeatureIndexedMatrix",
    "SequenceDataset",
    "SparseVector",
    "Taxonomy",
    "TaxonomyDataset",
    "expand_degree2_features",
    "expanded_dimension",
    "load_hierarchy",
    "load_ocr",
    "load_svmlight_binary",
    "load_svmlight_with_taxonomy",
    "pair_index",
    "svmlight_zero_based",
    "train_test_split",
]
