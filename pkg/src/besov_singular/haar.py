"""One-dimensional Haar analysis and synthesis in exact rational arithmetic.

Index ``(j, m, g)``: level ``j >= 0``, position ``m`` in ``2^-j Z`` and type
``g`` (father only at ``j = 0``). The orthonormal function is
``2^(j/2) psi(2^j (x - m))``, supported on ``[m, m + 2^-j]``.

Coefficients are stored unnormalised, ``a = int f(x) psi(2^j (x - m)) dx``,
which stays rational; the orthonormal coefficient is ``2^(j/2) a``.
"""

from __future__ import annotations

import bisect
import enum
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, NamedTuple

from .exponents import parse_scalar, recip
from .spaces import Flavor, Level, SeqVector, SpaceParams, TruncatedMixedSpace, besov_log2_weight, mixed_norm

__all__ = [
    "Kind",
    "HaarIndex",
    "PiecewiseConstant",
    "haar_analyze",
    "haar_synthesize",
    "normalized",
    "parseval_sum",
    "besov_seq_norm",
    "haar_valid_range",
    "IndexSets",
    "support_index_sets",
    "counting_constant",
    "coeffs_to_json",
    "coeffs_from_json",
]


class Kind(enum.Enum):
    Father = "father"
    Mother = "mother"


class HaarIndex(NamedTuple):
    j: int
    m: Fraction
    g: Kind

    @property
    def length(self) -> Fraction:
        return Fraction(1, 2 ** self.j)

    def validate(self) -> "HaarIndex":
        if self.j < 0:
            raise ValueError("level must be >= 0")
        if self.g is Kind.Father and self.j != 0:
            raise ValueError("father functions live on level 0 only")
        if (self.m * 2 ** self.j).denominator != 1:
            raise ValueError(f"position {self.m} is not in 2^-{self.j} Z")
        return self


Coeffs = Dict[HaarIndex, Fraction]


def _q(x) -> Fraction:
    x = parse_scalar(x)
    if not isinstance(x, Fraction):
        raise ValueError(f"breakpoints must be rational, got {x!r}")
    return x


@dataclass(frozen=True)
class PiecewiseConstant:
    """``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``, zero outside.

    Stored canonically (equal neighbours merged, zero ends trimmed), so ``==``
    compares functions.
    """

    breakpoints: tuple
    values: tuple

    def __post_init__(self):
        bps = tuple(_q(b) for b in self.breakpoints)
        vals = tuple(parse_scalar(v) for v in self.values)
        if vals and len(bps) != len(vals) + 1:
            raise ValueError("need one more breakpoint than values")
        if any(a >= b for a, b in zip(bps, bps[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        bps, vals = _canonical(bps, vals)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def indicator(cls, a, b, value=1) -> "PiecewiseConstant":
        return cls((a, b), (value,))

    @classmethod
    def zero(cls) -> "PiecewiseConstant":
        return cls((), ())

    @property
    def support(self):
        if not self.values:
            return None
        return self.breakpoints[0], self.breakpoints[-1]

    def __call__(self, x):
        x = Fraction(x)
        i = bisect.bisect_right(self.breakpoints, x) - 1
        if 0 <= i < len(self.values):
            return self.values[i]
        return 0

    def integral(self, a=None, b=None):
        if not self.values:
            return Fraction(0)
        F = _Primitive(self)
        a = self.breakpoints[0] if a is None else Fraction(a)
        b = self.breakpoints[-1] if b is None else Fraction(b)
        return F(b) - F(a)

    def l2_squared(self):
        return sum((v * v * (b - a) for v, a, b in zip(self.values, self.breakpoints, self.breakpoints[1:])), Fraction(0))

    def to_json(self) -> dict:
        return {"breakpoints": [str(b) for b in self.breakpoints], "values": [str(v) if isinstance(v, Fraction) else v for v in self.values]}

    @classmethod
    def from_json(cls, data) -> "PiecewiseConstant":
        return cls(tuple(data["breakpoints"]), tuple(data["values"]))


def _canonical(bps, vals):
    if not vals:
        return (), ()
    nb, nv = [bps[0]], []
    for i, v in enumerate(vals):
        if nv and nv[-1] == v:
            nb[-1] = bps[i + 1]
        else:
            nv.append(v)
            nb.append(bps[i + 1])
    # trim zero pieces at both ends
    while nv and nv[0] == 0:
        nv.pop(0)
        nb.pop(0)
    while nv and nv[-1] == 0:
        nv.pop()
        nb.pop()
    if not nv:
        return (), ()
    return tuple(nb), tuple(nv)


class _Primitive:
    """Fast repeated evaluation of ``int_{-inf}^x f`` by bisection over cumulative sums."""

    def __init__(self, f: PiecewiseConstant):
        self.bps = f.breakpoints
        self.vals = f.values
        cum = [Fraction(0)]
        for v, a, b in zip(self.vals, self.bps, self.bps[1:]):
            cum.append(cum[-1] + v * (b - a))
        self.cum = cum

    def __call__(self, x):
        bps = self.bps
        if not self.vals or x <= bps[0]:
            return Fraction(0)
        if x >= bps[-1]:
            return self.cum[-1]
        i = bisect.bisect_right(bps, x) - 1
        return self.cum[i] + self.vals[i] * (x - bps[i])


def _positions(lo: Fraction, hi: Fraction, j: int) -> range:
    """Integers ``k`` with ``[k 2^-j, (k+1) 2^-j]`` meeting ``(lo, hi)``."""
    scale = 2 ** j
    return range(math.floor(lo * scale), math.ceil(hi * scale))


def haar_analyze(f: PiecewiseConstant, Jmax: int) -> Coeffs:
    """Nonzero unnormalised coefficients of ``f`` on levels ``0..Jmax``."""
    if Jmax < 0:
        raise ValueError("Jmax must be >= 0")
    out: Coeffs = {}
    if not f.values:
        return out
    F = _Primitive(f)
    lo, hi = f.support
    for k in _positions(lo, hi, 0):
        a = F(Fraction(k + 1)) - F(Fraction(k))
        if a:
            out[HaarIndex(0, Fraction(k), Kind.Father)] = a
    for j in range(Jmax + 1):
        h = Fraction(1, 2 ** j)
        for k in _positions(lo, hi, j):
            m = k * h
            a = 2 * F(m + h / 2) - F(m) - F(m + h)
            if a:
                out[HaarIndex(j, m, Kind.Mother)] = a
    return out


def haar_synthesize(coeffs: Coeffs) -> PiecewiseConstant:
    """``sum_{j,m,g} a * 2^j * psi^g(2^j(x - m))``, assembled from exact jump sizes."""
    jumps: dict = {}

    def add(x, v):
        jumps[x] = jumps.get(x, 0) + v

    for idx, a in coeffs.items():
        idx = HaarIndex(idx.j, Fraction(idx.m), idx.g).validate()
        if not a:
            continue
        if idx.g is Kind.Father:
            add(idx.m, a)
            add(idx.m + 1, -a)
        else:
            h = idx.length
            c = a * 2 ** idx.j
            add(idx.m, c)
            add(idx.m + h / 2, -2 * c)
            add(idx.m + h, c)
    xs = sorted(x for x, v in jumps.items() if v)
    if not xs:
        return PiecewiseConstant.zero()
    vals, level = [], 0
    for x in xs[:-1]:
        level += jumps[x]
        vals.append(level)
    return PiecewiseConstant(tuple(xs), tuple(vals))


def normalized(idx: HaarIndex, a) -> float:
    """Orthonormal coefficient ``2^(j/2) a``."""
    return float(a) * 2.0 ** (idx.j / 2)


def parseval_sum(coeffs: Coeffs) -> Fraction:
    """``sum (2^(j/2) a)^2 = sum 2^j a^2``, exactly."""
    return sum((a * a * 2 ** idx.j for idx, a in coeffs.items()), Fraction(0))


def haar_valid_range(p, s) -> bool:
    """Whether Haar coefficients characterise ``B^s_pq`` in dimension one: ``1/p - 1 < s < min(1, 1/p)``."""
    inv = recip(p)
    return inv - 1 < s < min(1, inv)


def besov_seq_norm(coeffs: Coeffs, params: SpaceParams, flavor: Flavor = Flavor.InhomogeneousWavelet) -> float:
    """Weighted ``l^q(w_j l^p)`` norm of the orthonormal coefficients, levels ``0..max j``."""
    if params.n != 1:
        raise ValueError("Haar bridge is one-dimensional")
    if not haar_valid_range(params.p, params.s):
        warnings.warn(
            f"s={params.s} outside 1/p - 1 < s < min(1, 1/p): Haar coefficients do not characterise this space",
            stacklevel=2,
        )
    if not coeffs:
        return 0.0
    J = max(idx.j for idx in coeffs)
    blocks = [[] for _ in range(J + 1)]
    for idx in sorted(coeffs, key=lambda i: (i.j, i.m, i.g.value)):
        blocks[idx.j].append(normalized(idx, coeffs[idx]))
    blocks = [b or [0.0] for b in blocks]
    levels = tuple(Level(j, len(b), besov_log2_weight(j, params, flavor)) for j, b in enumerate(blocks))
    space = TruncatedMixedSpace(levels, params.q, params.p)
    return mixed_norm(SeqVector(blocks), space)


class IndexSets(NamedTuple):
    j: int
    R: list
    S: list


def _interval(I):
    a, b = (_q(v) for v in I)
    if not a < b:
        raise ValueError(f"empty interval {I!r}")
    return a, b


def _elements(j, ks, h):
    kinds = (Kind.Father, Kind.Mother) if j == 0 else (Kind.Mother,)
    return [HaarIndex(j, k * h, g) for k in ks for g in kinds]


def support_index_sets(V, U, Jmax: int, L: int = 0) -> list:
    """``R_j`` (support ``[m, m + 2^(L-j)]`` inside ``V``) and ``S_j`` (support meeting ``U``) for ``j <= Jmax``."""
    a, b = _interval(V)
    c, d = _interval(U)
    if not (c <= a and b <= d):
        raise ValueError("V must be contained in U")
    out = []
    for j in range(Jmax + 1):
        h = Fraction(1, 2 ** j)
        width = Fraction(2) ** (L - j)
        # R: a < m and m + width < b, m = k h
        r_lo = math.floor(a / h) + 1
        r_hi = math.ceil((b - width) / h) - 1
        # S: m + width > c and m < d
        s_lo = math.floor((c - width) / h) + 1
        s_hi = math.ceil(d / h) - 1
        R = _elements(j, range(r_lo, r_hi + 1), h)
        S = _elements(j, range(s_lo, s_hi + 1), h)
        out.append(IndexSets(j, R, S))
    return out


def counting_constant(sets: Iterable[IndexSets], max_A: int = 64):
    """Smallest ``A`` with ``#R_j >= 2^(j-A)`` for ``j >= A`` and ``#S_j <= 2^(j+A)`` for all ``j``."""
    sets = list(sets)
    for A in range(max_A + 1):
        if all(len(s.S) <= 2 ** (s.j + A) for s in sets) and all(
            len(s.R) >= 2 ** (s.j - A) for s in sets if s.j >= A
        ):
            return A
    return None


def coeffs_to_json(coeffs: Coeffs) -> list:
    rows = []
    for idx in sorted(coeffs, key=lambda i: (i.j, i.m, i.g.value)):
        a = coeffs[idx]
        rows.append({"j": idx.j, "m": str(idx.m), "g": idx.g.value, "c": normalized(idx, a), "a": str(a)})
    return rows


def coeffs_from_json(rows) -> Coeffs:
    out: Coeffs = {}
    for r in rows:
        idx = HaarIndex(int(r["j"]), Fraction(r["m"]), Kind(r["g"])).validate()
        # the exact field wins; "c" alone is only float-accurate for odd j
        if "a" in r:
            out[idx] = Fraction(r["a"])
        else:
            out[idx] = Fraction(float(r["c"]) * 2.0 ** (-idx.j / 2))
    return out
