"""Item-aware attention recommender: python bindings over the C++ core."""

from ._core import (
    ConfigError,
    DataError,
    Model,
    NumericalError,
    SegmentedSequence,
    Vocabulary,
    bce_loss,
    build_vocab,
    causal_mask,
    clean_tokens,
    full_rank,
    grad_check,
    inter_item_mask,
    intra_item_mask,
    item_spans,
    mask_schedule,
    ndcg_at_k,
    precision_at_k,
    run_training,
    synth_generate,
    tokenize_instruction,
    variants,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "Model",
    "NumericalError",
    "SegmentedSequence",
    "Vocabulary",
    "bce_loss",
    "build_vocab",
    "causal_mask",
    "clean_tokens",
    "full_rank",
    "grad_check",
    "inter_item_mask",
    "intra_item_mask",
    "item_spans",
    "mask_schedule",
    "ndcg_at_k",
    "precision_at_k",
    "run_training",
    "synth_generate",
    "tokenize_instruction",
    "variants",
]
