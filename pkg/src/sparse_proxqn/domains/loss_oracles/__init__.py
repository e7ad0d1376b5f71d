from .inference import (
    chain_log_partition,
    chain_messages,
    hier_downward_upward,
    seq_forward_backward,
    tree_posterior,
    viterbi_decode,
)
from .models import ChainMessages, HierModel, LogisticModel, SeqCrfModel, TreePosterior
from .services import HierOracle, LogisticOracle, SeqCrfOracle

__all__ = [
    "ChainMessages",
    "HierModel",
    "HierOracle",
    "LogisticModel",
    "LogisticOracle",
    "SeqCrfModel",
    "SeqCrfOracle",
    "TreePosterior",
    "chain_log_partition",
    "chain_messages",
    "hier_downward_upward",
    "seq_forward_backward",
    "tree_posterior",
    "viterbi_decode",
]
