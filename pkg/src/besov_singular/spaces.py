"""Weighted mixed-norm sequence spaces ``l^q(w_j * l^p(m_j))`` on finite windows.

A :class:`TruncatedMixedSpace` is an ordered list of levels ``(j, m_j, w_j)``
together with an outer exponent ``q`` and an inner exponent ``p``. Elements are
:class:`SeqVector` instances: one real block of length ``m_j`` per level.

Weights are stored through their base-2 logarithm. When that logarithm is
rational (every weight produced by :func:`besov_weight` from rational
parameters) products and ratios of weights are evaluated exactly, which is
what makes e.g. the probability-normalised embedding norm come out as exactly
``1.0``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .exponents import (
    INF,
    Exponent,
    Scalar,
    is_inf,
    parse_exponent,
    parse_scalar,
    recip,
    to_json_exponent,
)

__all__ = [
    "Flavor",
    "SpaceParams",
    "Level",
    "TruncatedMixedSpace",
    "SeqVector",
    "inner_norm",
    "mixed_norm",
    "mixed_norm_rows",
    "besov_weight",
    "besov_log2_weight",
    "recip",
    "j_s_reweight",
    "reweight_space",
    "block_embedding_norm",
    "quasi_triangle_constant",
]


class Flavor(enum.Enum):
    """Which weight sequence a Besov scale uses at level ``j``."""

    InhomogeneousWavelet = "inhomogeneous"
    Homogeneous = "homogeneous"
    ProbabilityNormalized = "probability"


@dataclass(frozen=True)
class SpaceParams:
    """The tuple ``(p, q, s, n)`` of a Besov (or Besov sequence) space."""

    p: Exponent
    q: Exponent
    s: Scalar = Fraction(0)
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "p", parse_exponent(self.p))
        object.__setattr__(self, "q", parse_exponent(self.q))
        object.__setattr__(self, "s", parse_scalar(self.s))
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise ValueError(f"dimension n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    def to_json(self) -> dict:
        s = self.s
        return {
            "p": to_json_exponent(self.p),
            "q": to_json_exponent(self.q),
            "s": int(s) if isinstance(s, Fraction) and s.denominator == 1 else (
                str(s) if isinstance(s, Fraction) else float(s)
            ),
            "n": self.n,
        }


def _log2_of_weight(weight) -> Scalar:
    weight_f = float(weight)
    if not (math.isfinite(weight_f) and weight_f > 0):
        raise ValueError(f"weights must be positive and finite, got {weight!r}")
    mantissa, exp = math.frexp(weight_f)
    if mantissa == 0.5:
        return Fraction(exp - 1)
    return math.log2(weight_f)


def _pow2(e: Scalar) -> float:
    if isinstance(e, Fraction) and e.denominator == 1:
        return math.ldexp(1.0, int(e))
    return 2.0 ** float(e)


@dataclass(frozen=True)
class Level:
    """One level ``j`` of a truncated mixed space: block size and weight.

    The weight is ``2 ** log2_weight``; pass ``weight=`` to :meth:`make` for
    arbitrary positive weights.
    """

    j: int
    size: int
    log2_weight: Scalar = Fraction(0)

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 1:
            raise ValueError(f"block size must be a positive integer, got {self.size!r}")
        if isinstance(self.log2_weight, float) and not math.isfinite(self.log2_weight):
            raise ValueError("weights must be positive and finite")

    @classmethod
    def make(cls, j: int, size: int, weight=1.0) -> "Level":
        return cls(int(j), int(size), _log2_of_weight(weight))

    @property
    def weight(self) -> float:
        return _pow2(self.log2_weight)


@dataclass(frozen=True)
class TruncatedMixedSpace:
    """Finite-window model of ``l^q(w_j * l^p{1..m_j})``.

    The window is caller supplied; nothing in this library truncates
    silently.
    """

    levels: tuple
    outer_q: Exponent
    inner_p: Exponent

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise ValueError("a space needs at least one level")
        for a, b in zip(levels, levels[1:]):
            if not a.j < b.j:
                raise ValueError("level indices must be strictly increasing")
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "outer_q", parse_exponent(self.outer_q))
        object.__setattr__(self, "inner_p", parse_exponent(self.inner_p))

    # construction helpers -------------------------------------------------

    @classmethod
    def uniform(cls, js: Iterable[int], sizes, p, q, weights=None) -> "TruncatedMixedSpace":
        """Build a space from level indices, block sizes and optional weights.

        ``sizes`` may be a single int (same size everywhere) or one per level;
        ``weights`` defaults to 1.
        """
        js = list(js)
        if isinstance(sizes, int):
            sizes = [sizes] * len(js)
        if weights is None:
            weights = [1.0] * len(js)
        if not (len(js) == len(sizes) == len(weights)):
            raise ValueError("js, sizes and weights must have equal length")
        levels = tuple(Level.make(j, m, w) for j, m, w in zip(js, sizes, weights))
        return cls(levels, q, p)

    @classmethod
    def probability(cls, sizes, r, q, js=None) -> "TruncatedMixedSpace":
        """Blocks ``m^(-1/r) * l^r(m)``, i.e. ``L^r`` of the uniform probability on ``m`` points."""
        sizes = list(sizes)
        js = list(range(len(sizes))) if js is None else list(js)
        r = parse_exponent(r)
        levels = tuple(
            Level(j, m, -recip(r) * _exact_log2_int(m)) for j, m in zip(js, sizes)
        )
        return cls(levels, q, r)

    @classmethod
    def besov(cls, params: SpaceParams, js: Iterable[int], sizes, flavor: "Flavor") -> "TruncatedMixedSpace":
        """Levels weighted by :func:`besov_weight` for the given flavour."""
        js = list(js)
        if isinstance(sizes, int):
            sizes = [sizes] * len(js)
        elif callable(sizes):
            sizes = [sizes(j) for j in js]
        levels = tuple(
            Level(j, m, besov_log2_weight(j, params, flavor)) for j, m in zip(js, sizes)
        )
        return cls(levels, params.q, params.p)

    # structure ------------------------------------------------------------

    @property
    def js(self) -> list:
        return [lv.j for lv in self.levels]

    @property
    def block_sizes(self) -> list:
        return [lv.size for lv in self.levels]

    @property
    def weights(self) -> np.ndarray:
        return np.array([lv.weight for lv in self.levels])

    @property
    def dim(self) -> int:
        return sum(self.block_sizes)

    @property
    def offsets(self) -> list:
        out, acc = [], 0
        for m in self.block_sizes:
            out.append(acc)
            acc += m
        out.append(acc)
        return out

    def same_structure(self, other: "TruncatedMixedSpace") -> bool:
        return self.js == other.js and self.block_sizes == other.block_sizes

    def level_slices(self) -> list:
        off = self.offsets
        return [slice(off[i], off[i + 1]) for i in range(len(self.levels))]

    def index_of(self, j: int) -> int:
        return self.js.index(j)

    def with_exponents(self, p=None, q=None) -> "TruncatedMixedSpace":
        return TruncatedMixedSpace(
            self.levels,
            self.outer_q if q is None else q,
            self.inner_p if p is None else p,
        )

    def zeros(self) -> "SeqVector":
        return SeqVector([np.zeros(m) for m in self.block_sizes])

    def vector(self, flat) -> "SeqVector":
        return SeqVector.from_flat(flat, self)

    def norm(self, x) -> float:
        return mixed_norm(x, self)

    # serialisation --------------------------------------------------------

    def to_json(self) -> dict:
        levels = []
        for lv in self.levels:
            rec = {"j": lv.j, "size": lv.size, "weight": lv.weight}
            if isinstance(lv.log2_weight, Fraction):
                rec["log2_weight"] = str(lv.log2_weight)
            levels.append(rec)
        return {"p": to_json_exponent(self.inner_p), "q": to_json_exponent(self.outer_q), "levels": levels}

    @classmethod
    def from_json(cls, data) -> "TruncatedMixedSpace":
        if isinstance(data, str):
            data = json.loads(data)
        levels = []
        for rec in data["levels"]:
            if "log2_weight" in rec:
                levels.append(Level(int(rec["j"]), int(rec["size"]), Fraction(rec["log2_weight"])))
            else:
                levels.append(Level.make(rec["j"], rec["size"], rec.get("weight", 1.0)))
        return cls(tuple(levels), data["q"], data["p"])


@dataclass
class SeqVector:
    """Block-structured real vector; ``blocks[i]`` belongs to level ``i`` of its space."""

    blocks: list = field(default_factory=list)

    def __post_init__(self):
        self.blocks = [np.asarray(b, dtype=float).reshape(-1) for b in self.blocks]

    @classmethod
    def from_flat(cls, flat, space: TruncatedMixedSpace) -> "SeqVector":
        flat = np.asarray(flat, dtype=float).reshape(-1)
        if flat.size != space.dim:
            raise ValueError(f"flat vector has length {flat.size}, space dimension is {space.dim}")
        return cls([flat[s].copy() for s in space.level_slices()])

    def flat(self) -> np.ndarray:
        if not self.blocks:
            return np.zeros(0)
        return np.concatenate(self.blocks)

    def conforms(self, space: TruncatedMixedSpace) -> bool:
        return len(self.blocks) == len(space.levels) and all(
            b.size == m for b, m in zip(self.blocks, space.block_sizes)
        )

    def check(self, space: TruncatedMixedSpace) -> None:
        if not self.conforms(space):
            raise ValueError(
                "vector shape "
                f"{[b.size for b in self.blocks]} does not match block sizes {space.block_sizes}"
            )

    def __add__(self, other: "SeqVector") -> "SeqVector":
        if [b.size for b in self.blocks] != [b.size for b in other.blocks]:
            raise ValueError("shape mismatch")
        return SeqVector([a + b for a, b in zip(self.blocks, other.blocks)])

    def __mul__(self, scalar) -> "SeqVector":
        return SeqVector([scalar * b for b in self.blocks])

    __rmul__ = __mul__

    def sup(self) -> float:
        return max((float(np.max(np.abs(b))) for b in self.blocks if b.size), default=0.0)

    def to_json(self, space: TruncatedMixedSpace) -> dict:
        self.check(space)
        return {
            "levels": [
                {"j": lv.j, "weight": lv.weight, "values": [float(v) for v in b]}
                for lv, b in zip(space.levels, self.blocks)
            ]
        }

    @classmethod
    def from_json(cls, data) -> "SeqVector":
        if isinstance(data, str):
            data = json.loads(data)
        return cls([rec["values"] for rec in data["levels"]])


# ---------------------------------------------------------------------------
# norms


def _check_p(p) -> Exponent:
    return parse_exponent(p)


def _power_sum_norm(values: np.ndarray, p) -> float:
    """(sum |v|^p)^(1/p) for nonnegative ``values``, scaled against overflow."""
    if values.size == 0:
        return 0.0
    top = float(np.max(values))
    if top == 0.0:
        return 0.0
    if is_inf(p):
        return top
    pf = float(p)
    if pf == 1.0:
        return math.fsum(values.tolist())
    scaled = (values / top) ** pf
    return top * math.fsum(scaled.tolist()) ** (1.0 / pf)


def inner_norm(v, p) -> float:
    """Quasi-norm ``(sum |v_k|^p)^(1/p)`` of a real vector; ``max |v_k|`` for ``p = inf``.

    >>> inner_norm([3, 4], 2)
    5.0
    """
    p = _check_p(p)
    arr = np.abs(np.asarray(v, dtype=float).reshape(-1))
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector has non-finite entries")
    return _power_sum_norm(arr, p)


def mixed_norm(x, sp: TruncatedMixedSpace) -> float:
    """``(sum_j (w_j * ||x_j||_p)^q)^(1/q)``, the supremum over ``j`` when ``q = inf``.

    ``x`` is a :class:`SeqVector` or a flat array of length ``sp.dim``.
    """
    if not isinstance(x, SeqVector):
        x = SeqVector.from_flat(x, sp)
    x.check(sp)
    level_norms = np.array(
        [lv.weight * inner_norm(b, sp.inner_p) for lv, b in zip(sp.levels, x.blocks)]
    )
    return _power_sum_norm(level_norms, sp.outer_q)


def _rows_power_norm(a: np.ndarray, p) -> np.ndarray:
    """Row-wise ``(sum |a_ik|^p)^(1/p)`` for nonnegative ``a`` (vectorised, scaled)."""
    if a.shape[1] == 0:
        return np.zeros(a.shape[0])
    top = a.max(axis=1)
    if is_inf(p):
        return top
    safe = np.where(top > 0, top, 1.0)
    pf = float(p)
    s = ((a / safe[:, None]) ** pf).sum(axis=1)
    return np.where(top > 0, safe * s ** (1.0 / pf), 0.0)


def mixed_norm_rows(X, sp: TruncatedMixedSpace) -> np.ndarray:
    """Mixed norm of every row of ``X`` (shape ``(K, sp.dim)``); plain summation."""
    X = np.abs(np.atleast_2d(np.asarray(X, dtype=float)))
    if X.shape[1] != sp.dim:
        raise ValueError(f"rows have length {X.shape[1]}, space dimension is {sp.dim}")
    cols = [lv.weight * _rows_power_norm(X[:, s], sp.inner_p) for lv, s in zip(sp.levels, sp.level_slices())]
    return _rows_power_norm(np.stack(cols, axis=1), sp.outer_q)


def quasi_triangle_constant(p, q) -> float:
    """``2^max(1/min(p,q) - 1, 0)``: triangle constant of ``l^q(l^p)``."""
    r = max(float(recip(parse_exponent(p))), float(recip(parse_exponent(q))))
    return 2.0 ** max(r - 1.0, 0.0)


# ---------------------------------------------------------------------------
# weights


def besov_log2_weight(j: int, params: SpaceParams, flavor: Flavor) -> Scalar:
    """Base-2 logarithm of :func:`besov_weight`; exact for rational parameters."""
    n = params.n
    inv_p = recip(params.p)
    if flavor is Flavor.InhomogeneousWavelet:
        e = params.s - n * inv_p + Fraction(n, 2)
    elif flavor is Flavor.Homogeneous:
        e = params.s - n * inv_p
    elif flavor is Flavor.ProbabilityNormalized:
        e = -n * inv_p
    else:  # pragma: no cover
        raise ValueError(f"unknown flavor {flavor!r}")
    out = j * e
    if isinstance(out, float) and out.is_integer():
        return Fraction(int(out))
    return out


def besov_weight(j: int, params: SpaceParams, flavor: Flavor = Flavor.InhomogeneousWavelet) -> float:
    """Level weight of a Besov sequence space.

    ``InhomogeneousWavelet``: ``2^(j(s - n/p + n/2))``; ``Homogeneous``:
    ``2^(j(s - n/p))``; ``ProbabilityNormalized``: ``2^(-jn/p)`` (the weight
    turning ``l^p`` on ``2^(jn)`` points into ``L^p`` of the uniform
    probability measure).
    """
    return _pow2(besov_log2_weight(j, params, flavor))


# ---------------------------------------------------------------------------
# maps


def j_s_reweight(x: SeqVector, space: TruncatedMixedSpace, s) -> SeqVector:
    """Scale block ``j`` by ``2^(js)``."""
    x.check(space)
    s = parse_scalar(s)
    return SeqVector([_pow2(lv.j * s) * b for lv, b in zip(space.levels, x.blocks)])


def reweight_space(space: TruncatedMixedSpace, s) -> TruncatedMixedSpace:
    """Multiply every level weight by ``2^(js)``."""
    s = parse_scalar(s)
    levels = tuple(Level(lv.j, lv.size, lv.log2_weight + lv.j * s) for lv in space.levels)
    return TruncatedMixedSpace(levels, space.outer_q, space.inner_p)


def block_embedding_norm(src: TruncatedMixedSpace, dst: TruncatedMixedSpace) -> float:
    """Exact norm of the identity ``src -> dst`` between spaces of equal block structure.

    The level factor is ``c_j = (w_j^dst / w_j^src) * m_j^max(0, 1/p_dst - 1/p_src)``;
    factors combine by a supremum when ``q_src <= q_dst`` and otherwise by the
    ``l^r`` norm with ``1/r = 1/q_dst - 1/q_src``.
    """
    if not src.same_structure(dst):
        raise ValueError("identity embedding needs identical level indices and block sizes")
    gap = recip(dst.inner_p) - recip(src.inner_p)
    if gap < 0:
        gap = Fraction(0) if isinstance(gap, Fraction) else 0.0
    factors = []
    for ls, ld in zip(src.levels, dst.levels):
        log_m = _exact_log2_int(ld.size)
        e = ld.log2_weight - ls.log2_weight + gap * log_m
        factors.append(_pow2(e))
    factors = np.array(factors)
    q_src, q_dst = src.outer_q, dst.outer_q
    if is_inf(q_dst) or (not is_inf(q_src) and q_src <= q_dst):
        return float(factors.max())
    inv_r = recip(q_dst) - recip(q_src)
    return _power_sum_norm(factors, 1 / inv_r if inv_r else INF)


def _exact_log2_int(m: int):
    if m > 0 and m & (m - 1) == 0:
        return Fraction(m.bit_length() - 1)
    return math.log2(m)
