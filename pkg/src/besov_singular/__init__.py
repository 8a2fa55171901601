"""Strict singularity of Besov embeddings and the sequence-space machinery behind it."""

from .exponents import INF, parse_exponent, parse_scalar
from .spaces import (
    Flavor,
    Level,
    SeqVector,
    SpaceParams,
    TruncatedMixedSpace,
    block_embedding_norm,
    j_s_reweight,
    mixed_norm,
)
from .classify import (
    EmbeddingFlags,
    EmbeddingVerdict,
    Setting,
    Verdict,
    WitnessHint,
    classify,
    classify_domain,
    classify_homogeneous,
    classify_rn,
    embedding_flags,
)

__version__ = "0.1.0"
