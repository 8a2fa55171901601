"""Decision procedures for Besov embeddings ``B^{s0}_{p0 q0} -> B^{s1}_{p1 q1}``.

Three settings are covered: a bounded Lipschitz domain, the whole space
``R^n`` and the homogeneous scale on ``R^n``. Each returns one of five
verdicts ordered by the chain compact => finitely strictly singular =>
strictly singular => bounded.

All comparisons on the critical lines are exact when ``p, q, s`` are
rational (or ``inf``); float smoothness falls back to an absolute tolerance
of ``1e-12``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .exponents import compare, is_inf, recip
from .spaces import SpaceParams

__all__ = [
    "Verdict",
    "Setting",
    "WitnessHint",
    "EmbeddingVerdict",
    "EmbeddingFlags",
    "classify",
    "classify_domain",
    "classify_rn",
    "classify_homogeneous",
    "embedding_flags",
]


class Verdict(enum.Enum):
    NoEmbedding = "NoEmbedding"
    Compact = "Compact"
    NonCompactFSS = "NonCompactFSS"
    SSNotFSS = "SSNotFSS"
    NotSS = "NotSS"


class Setting(enum.Enum):
    Domain = "domain"
    Rn = "rn"
    Homogeneous = "homogeneous"


class WitnessHint(enum.Enum):
    """Which explicit subspace family certifies the verdict's lower side."""

    rademacher = "rademacher"
    diagonal = "diagonal"
    constant_block = "constant_block"
    lacunary = "lacunary"
    none = "none"


@dataclass(frozen=True)
class EmbeddingVerdict:
    setting: Setting
    verdict: Verdict
    witness_hint: WitnessHint = WitnessHint.none

    @property
    def embeds(self) -> bool:
        return self.verdict is not Verdict.NoEmbedding

    @property
    def compact(self) -> bool:
        return self.verdict is Verdict.Compact

    @property
    def fss(self) -> bool:
        return self.verdict in (Verdict.Compact, Verdict.NonCompactFSS)

    @property
    def ss(self) -> bool:
        return self.fss or self.verdict is Verdict.SSNotFSS

    @property
    def flags(self) -> dict:
        return {"embeds": self.embeds, "compact": self.compact, "fss": self.fss, "ss": self.ss}

    def to_json(self) -> dict:
        return {
            "setting": self.setting.value,
            "verdict": self.verdict.value,
            "flags": self.flags,
            "witness_hint": self.witness_hint.value,
        }


class EmbeddingFlags(NamedTuple):
    exists: bool
    compact: bool


def _check_dims(P0: SpaceParams, P1: SpaceParams) -> int:
    if P0.n != P1.n:
        raise ValueError(f"dimension mismatch: n0={P0.n}, n1={P1.n}")
    return P0.n


class _Quantities(NamedTuple):
    d: object  # s0 - s1
    gap: object  # n/p0 - n/p1 (may be negative)
    g: object  # max(0, gap)
    q_cmp: int  # sign of q0 - q1


def _quantities(P0: SpaceParams, P1: SpaceParams) -> _Quantities:
    n = _check_dims(P0, P1)
    d = P0.s - P1.s
    gap = n * recip(P0.p) - n * recip(P1.p)
    g = gap if compare(gap, 0) > 0 else Fraction(0)
    return _Quantities(d, gap, g, compare(P0.q, P1.q))


def classify_domain(P0: SpaceParams, P1: SpaceParams) -> EmbeddingVerdict:
    """Embedding on a bounded Lipschitz domain."""
    d, gap, g, q_cmp = _quantities(P0, P1)
    S = Setting.Domain
    c = compare(d, g)
    if c < 0 or (c == 0 and q_cmp > 0):
        return EmbeddingVerdict(S, Verdict.NoEmbedding)
    if c > 0:
        return EmbeddingVerdict(S, Verdict.Compact)
    # critical line d == g
    if q_cmp == 0:
        hint = WitnessHint.lacunary if compare(g, 0) > 0 else WitnessHint.constant_block
        return EmbeddingVerdict(S, Verdict.NotSS, hint)
    if compare(g, 0) > 0:
        return EmbeddingVerdict(S, Verdict.NonCompactFSS)
    # d == 0 and p1 <= p0
    if is_inf(P0.p) and not is_inf(P1.p):
        return EmbeddingVerdict(S, Verdict.NonCompactFSS)
    if is_inf(P0.p):
        # p0 = p1 = inf: each block is the identity on l^inf
        return EmbeddingVerdict(S, Verdict.SSNotFSS, WitnessHint.diagonal)
    hint = WitnessHint.diagonal if compare(P0.p, P1.p) == 0 else WitnessHint.rademacher
    return EmbeddingVerdict(S, Verdict.SSNotFSS, hint)


def classify_rn(P0: SpaceParams, P1: SpaceParams) -> EmbeddingVerdict:
    """Embedding on ``R^n``; never compact and never strictly-but-not-finitely singular."""
    d, gap, g, q_cmp = _quantities(P0, P1)
    S = Setting.Rn
    p_cmp = compare(P0.p, P1.p)
    c_g = compare(d, g)
    c_gap = compare(d, gap)
    if p_cmp > 0 or c_g < 0 or (c_gap == 0 and compare(gap, 0) >= 0 and q_cmp > 0):
        return EmbeddingVerdict(S, Verdict.NoEmbedding)
    # from here p0 <= p1, so gap >= 0 and g == gap
    gap_pos = compare(gap, 0) > 0
    if gap_pos and c_gap > 0:
        return EmbeddingVerdict(S, Verdict.NonCompactFSS)
    if gap_pos and c_gap == 0:
        if q_cmp < 0:
            return EmbeddingVerdict(S, Verdict.NonCompactFSS)
        return EmbeddingVerdict(S, Verdict.NotSS, WitnessHint.lacunary)
    # p0 == p1: either d > 0, or d == 0 with q0 <= q1
    return EmbeddingVerdict(S, Verdict.NotSS, WitnessHint.diagonal)


def classify_homogeneous(P0: SpaceParams, P1: SpaceParams) -> EmbeddingVerdict:
    """Embedding of homogeneous Besov spaces on ``R^n``."""
    d, gap, g, q_cmp = _quantities(P0, P1)
    S = Setting.Homogeneous
    if compare(d, gap) != 0 or compare(P0.p, P1.p) > 0 or q_cmp > 0:
        return EmbeddingVerdict(S, Verdict.NoEmbedding)
    if compare(gap, 0) > 0 and q_cmp < 0:
        return EmbeddingVerdict(S, Verdict.NonCompactFSS)
    return EmbeddingVerdict(S, Verdict.NotSS, WitnessHint.diagonal)


_CLASSIFIERS = {
    Setting.Domain: classify_domain,
    Setting.Rn: classify_rn,
    Setting.Homogeneous: classify_homogeneous,
}


def classify(P0: SpaceParams, P1: SpaceParams, setting) -> EmbeddingVerdict:
    return _CLASSIFIERS[Setting(setting)](P0, P1)


def embedding_flags(P0: SpaceParams, P1: SpaceParams, setting) -> EmbeddingFlags:
    """Existence and compactness read off the sequence-space embedding criteria.

    Deliberately written against the existence criteria rather than by
    calling the classifiers, so the two can be cross-checked.
    """
    setting = Setting(setting)
    d, gap, g, q_cmp = _quantities(P0, P1)
    gap_nonneg = compare(gap, 0) >= 0
    if setting is Setting.Rn:
        exists = gap_nonneg and (
            (compare(d, gap) == 0 and q_cmp <= 0) or compare(d, gap) > 0
        )
        return EmbeddingFlags(exists, False)
    if setting is Setting.Domain:
        c = compare(d, g)
        exists = (c == 0 and q_cmp <= 0) or c > 0
        return EmbeddingFlags(exists, c > 0)
    exists = gap_nonneg and compare(d, gap) == 0 and q_cmp <= 0
    return EmbeddingFlags(exists, False)
