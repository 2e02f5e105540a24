"""Toolkit for building, merging, and evaluating clusters of
fact-checked claims from similar-claim pairs."""

from .core import (
    Claim,
    ClaimPair,
    ConsensusPolicy,
    Label,
    LabeledPair,
    Partition,
    PipelineParams,
    Provenance,
    Verdict,
    canonical_pair_key,
    normalize_text,
    validate_dataset,
)
from .vecmath import EmbeddingSet, centroid, cosine_similarity, l2_normalize

__version__ = "0.1.0"

__all__ = [
    "Claim",
    "ClaimPair",
    "ConsensusPolicy",
    "EmbeddingSet",
    "Label",
    "LabeledPair",
    "Partition",
    "PipelineParams",
    "Provenance",
    "Verdict",
    "canonical_pair_key",
    "centroid",
    "cosine_similarity",
    "l2_normalize",
    "normalize_text",
    "validate_dataset",
    "__version__",
]
