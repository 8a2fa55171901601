"""Gliding-hump construction for ``l^q0(w l^p) -> l^q1(w l^p)``, ``q0 < q1``.

Given any subspace (through an oracle that returns unit vectors vanishing on
an initial segment of levels), :func:`glide` builds ``N`` almost disjoint
humps whose sum ``x`` satisfies ``||x||_q1 < eps ||x||_q0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np
from scipy import linalg

from .exponents import INF, is_inf, parse_exponent, recip
from .spaces import SeqVector, TruncatedMixedSpace, inner_norm, mixed_norm

__all__ = [
    "HumpParams",
    "OracleExhausted",
    "SubspaceOracle",
    "BasisOracle",
    "GeneratorOracle",
    "GlideResult",
    "choose_N",
    "choose_delta",
    "delta_predicate",
    "delta_factor",
    "glide",
    "random_sparse_basis",
]


class OracleExhausted(RuntimeError):
    """The subspace could not supply another hump."""

    def __init__(self, message: str, partial_ratio: float = math.nan, found: int = 0):
        super().__init__(message)
        self.partial_ratio = partial_ratio
        self.found = found


def _f(x) -> float:
    return math.inf if is_inf(x) else float(x)


def _check_q(q0, q1):
    q0, q1 = parse_exponent(q0), parse_exponent(q1)
    if is_inf(q0):
        raise ValueError("q0 must be finite")
    if not q0 < q1:
        raise ValueError("need q0 < q1")
    return q0, q1


def choose_N(epsilon: float, q0, q1) -> int:
    """Smallest ``N >= 2`` with ``N^(1/q1 - 1/q0) < epsilon / 2``."""
    q0, q1 = _check_q(q0, q1)
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    e = float(recip(q1) - recip(q0))
    target = epsilon / 2

    def ok(N):
        return N ** e < target

    N = max(2, int(math.floor(target ** (1 / e))) + 1) if target < 1 else 2
    while N > 2 and ok(N - 1):
        N -= 1
    while not ok(N):
        N += 1
    return N


def delta_predicate(N: int, delta: float, q0, q1) -> float:
    """Left side of the displayed ``delta`` condition (exponent 1 in the numerator if ``q1 = inf``)."""
    q0, q1 = _f(q0), _f(q1)
    m0, m1 = min(1.0, q0), min(1.0, q1)
    den = 1 - (N + 1) * delta ** min(1.0, 1 / q0)
    if den <= 0:
        return math.inf
    den = den ** (q0 / m0)
    if math.isinf(q1):
        num = 1 + (N + 1) * delta ** (1 / q0)
    else:
        num = (1 + (N + 1) * delta ** (m1 / q0)) ** (q1 / m1)
    return num / den


def delta_factor(N: int, delta: float, q0, q1) -> float:
    """``F`` in ``||x||_q1 / ||x||_q0 <= N^(1/q1 - 1/q0) * F``, tracked through the hump estimates.

    Every hump has ``q0``-mass at most ``delta`` outside its own window, so on
    window ``k`` the ``min(1, q)``-triangle inequality gives
    ``||x||^m1 <= 1 + N delta^(m1/q0)`` (the ``N`` tails of the others plus the
    hump itself, whose ``q1`` norm is at most its ``q0`` norm), and
    ``||x||^m0 >= 1 - (N + 1) delta^min(1, 1/q0)`` from below.
    """
    q0, q1 = _f(q0), _f(q1)
    m0, m1 = min(1.0, q0), min(1.0, q1)
    low = 1 - (N + 1) * delta ** min(1.0, 1 / q0)
    if low <= 0:
        return math.inf
    low = low ** (1 / m0)
    t = N * delta ** (m1 / q0)
    if math.isinf(q1):
        up = (1 + t) ** (1 / m1)
    else:
        up = ((N * (1 + t) ** (q1 / m1) + t ** (q1 / m1)) / N) ** (1 / q1)
    return up / low


def choose_delta(N: int, q0, q1) -> float:
    """Halve from 1/2 until the displayed predicate and :func:`delta_factor` are both below 2."""
    q0, q1 = _check_q(q0, q1)
    if N < 2:
        raise ValueError("N must be >= 2")
    delta = 0.5
    while not (delta_predicate(N, delta, q0, q1) < 2 and delta_factor(N, delta, q0, q1) < 2):
        delta /= 2
        if delta == 0:  # pragma: no cover
            raise RuntimeError("no admissible delta")
    return delta


@dataclass(frozen=True)
class HumpParams:
    epsilon: float
    N: int
    delta: float
    q0: object
    q1: object

    @classmethod
    def make(cls, epsilon, q0, q1) -> "HumpParams":
        q0, q1 = _check_q(q0, q1)
        N = choose_N(epsilon, q0, q1)
        return cls(epsilon, N, choose_delta(N, q0, q1), q0, q1)

    def valid(self) -> bool:
        e = float(recip(self.q1) - recip(self.q0))
        return (
            self.N ** e < self.epsilon / 2
            and 0 < self.delta < 1
            and delta_predicate(self.N, self.delta, self.q0, self.q1) < 2
            and delta_factor(self.N, self.delta, self.q0, self.q1) < 2
        )


class SubspaceOracle(Protocol):
    def query(self, cutoff: Optional[int]) -> Optional[SeqVector]:
        """Unit vector of the subspace vanishing on levels ``<= cutoff``, or ``None``."""


def _cut_index(space: TruncatedMixedSpace, cutoff) -> int:
    """Number of leading coordinates on levels ``<= cutoff``."""
    if cutoff is None:
        return 0
    k = 0
    for lvl in space.levels:
        if lvl.j <= cutoff:
            k += lvl.size
    return k


def _earliest_ending(V: np.ndarray) -> np.ndarray:
    """Vector in the column span of ``V`` whose last nonzero coordinate is as early as possible.

    Row echelon form on the coordinates read backwards; the last pivot row is
    the answer, with its pivot scaled to 1.
    """
    M = V[::-1, :].T.copy()
    rows, cols = M.shape
    tol = 1e-10 * max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    r = 0
    for c in range(cols):
        if r == rows:
            break
        i = r + int(np.argmax(np.abs(M[r:, c])))
        if abs(M[i, c]) <= tol:
            M[r:, c] = 0.0
            continue
        M[[r, i]] = M[[i, r]]
        M[r] /= M[r, c]
        M[r, c] = 1.0
        for k in range(r + 1, rows):
            M[k] -= M[k, c] * M[r]
            M[k, c] = 0.0
        r += 1
    return M[r - 1][::-1].copy()


class BasisOracle:
    """Subspace given by a finite basis (columns), queried through constrained nullspaces."""

    def __init__(self, basis, space: TruncatedMixedSpace):
        B = np.asarray(basis, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        if B.shape[0] != space.dim:
            raise ValueError("basis rows must match the space dimension")
        self.basis = B
        self.space = space

    @classmethod
    def full(cls, space: TruncatedMixedSpace) -> "BasisOracle":
        return cls(np.eye(space.dim), space)

    def query(self, cutoff):
        K = _cut_index(self.space, cutoff)
        if K >= self.space.dim:
            return None
        B = self.basis
        if K:
            Nul = linalg.null_space(B[:K])
            if Nul.shape[1] == 0:
                return None
            V = B @ Nul
        else:
            V = B
        v = _earliest_ending(V)
        v[:K] = 0.0
        if not np.any(v):
            return None
        x = SeqVector.from_flat(v, self.space)
        nrm = mixed_norm(x, self.space)
        return SeqVector.from_flat(v / nrm, self.space)


class GeneratorOracle:
    """Subspace spanned by ``gen(0), gen(1), ...`` (flat vectors with increasing supports).

    ``gen`` returns ``None`` once the representation is exhausted.
    """

    def __init__(self, gen: Callable[[int], Optional[np.ndarray]], space: TruncatedMixedSpace, limit: int = 10_000):
        self.gen = gen
        self.space = space
        self.limit = limit
        self._cache: list = []
        self._done = False

    def _get(self, i):
        while len(self._cache) <= i and not self._done and len(self._cache) < self.limit:
            v = self.gen(len(self._cache))
            if v is None:
                self._done = True
            else:
                self._cache.append(np.asarray(v, dtype=float))
        return self._cache[i] if i < len(self._cache) else None

    def query(self, cutoff):
        K = _cut_index(self.space, cutoff)
        i = 0
        while True:
            v = self._get(i)
            if v is None:
                return None
            if not np.any(v[:K]) and np.any(v):
                x = SeqVector.from_flat(v, self.space)
                return SeqVector.from_flat(v / mixed_norm(x, self.space), self.space)
            i += 1


@dataclass
class GlideResult:
    vector: SeqVector
    params: HumpParams
    cutoffs: list
    src_norm: float
    dst_norm: float
    humps: list = field(repr=False, default_factory=list)

    @property
    def ratio(self) -> float:
        return self.dst_norm / self.src_norm

    def to_json(self) -> dict:
        return {
            "N": self.params.N,
            "delta": self.params.delta,
            "cutoffs": list(self.cutoffs),
            "ratio": self.ratio,
        }


def _level_masses(x: SeqVector, space: TruncatedMixedSpace, q0: float) -> list:
    return [(lvl.weight * inner_norm(b, space.inner_p)) ** q0 for lvl, b in zip(space.levels, x.blocks)]


def glide(oracle: SubspaceOracle, epsilon: float, sp_src: TruncatedMixedSpace, sp_dst: TruncatedMixedSpace) -> GlideResult:
    """Run the hump induction and return ``x = x1 + ... + xN`` with ``||x||_dst < eps ||x||_src``."""
    if not sp_src.same_structure(sp_dst):
        raise ValueError("source and target must share their block structure")
    if sp_src.inner_p != sp_dst.inner_p:
        raise ValueError("source and target must share the inner exponent")
    if any(a.log2_weight != b.log2_weight for a, b in zip(sp_src.levels, sp_dst.levels)):
        raise ValueError("source and target must carry identical weights")
    params = HumpParams.make(epsilon, sp_src.outer_q, sp_dst.outer_q)
    q0 = float(params.q0)
    js = sp_src.js
    humps, cutoffs = [], []
    cutoff = None
    total = None
    for n in range(params.N):
        h = oracle.query(cutoff)
        if h is None:
            partial = math.nan
            if total is not None:
                partial = mixed_norm(total, sp_dst) / mixed_norm(total, sp_src)
            raise OracleExhausted(
                f"subspace supplied only {n} of {params.N} humps", partial_ratio=partial, found=n
            )
        masses = _level_masses(h, sp_src, q0)
        start = 0 if cutoff is None else js.index(cutoff) + 1
        # smallest cutoff past the previous one whose tail mass is <= delta
        k = start
        while math.fsum(masses[k + 1:]) > params.delta:
            k += 1
        cutoff = js[k]
        humps.append(h)
        cutoffs.append(cutoff)
        total = h if total is None else total + h
    return GlideResult(
        vector=total,
        params=params,
        cutoffs=cutoffs,
        src_norm=mixed_norm(total, sp_src),
        dst_norm=mixed_norm(total, sp_dst),
        humps=humps,
    )


def random_sparse_basis(space: TruncatedMixedSpace, dim: int, rng, spread: int = 3) -> np.ndarray:
    """``dim`` random vectors, each supported on a window of ``spread`` consecutive levels.

    Window starts are spread over the levels, so the span reaches deep levels
    the way an infinite-dimensional subspace would.
    """
    L = len(space.levels)
    slices = space.level_slices()
    starts = np.sort(rng.integers(0, max(L - spread + 1, 1), size=dim))
    B = np.zeros((space.dim, dim))
    for k, s in enumerate(starts):
        for lv in range(s, min(s + spread, L)):
            sl = slices[lv]
            mask = rng.random(sl.stop - sl.start) < 0.7
            B[sl, k] = rng.standard_normal(sl.stop - sl.start) * mask
        if not np.any(B[:, k]):
            B[slices[s].start, k] = 1.0
    return B
