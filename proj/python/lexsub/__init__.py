"""Lexical substitution effect estimation (C++ core)."""

from ._lexsub import (
    LexsubError,
    aggregate_effect,
    binarize_rct_effect,
    commands,
    estimate,
    generate_synthetic,
    pairwise_agreement,
    pearson,
    roc_auc,
    run,
    spearman,
    substitute_first_word,
    tokenize,
)

__all__ = [
    "LexsubError",
    "aggregate_effect",
    "binarize_rct_effect",
    "commands",
    "estimate",
    "generate_synthetic",
    "pairwise_agreement",
    "pearson",
    "roc_auc",
    "run",
    "spearman",
    "substitute_first_word",
    "tokenize",
]
