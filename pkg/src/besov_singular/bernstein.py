"""Bernstein numbers of identity maps between truncated mixed-norm spaces.

``b_n(T) = sup_{dim Z >= n} inf_{x in Z, ||x|| = 1} ||T x||``.

Closed-form upper bounds (:func:`fss_upper_bound`, :func:`linfty_lp_upper_bound`)
sit next to a brute-force sup-inf search (:func:`bruteforce_bernstein`) for
total dimension at most 12. The search is heuristic on the outer supremum; the
value it reports is the infimum over an explicit witness subspace and hence a
certified lower bound for ``b_n`` up to the inner-minimisation accuracy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np
from scipy import optimize

from .exponents import INF, is_inf, parse_exponent, recip
from .spaces import (
    SeqVector,
    SpaceParams,
    TruncatedMixedSpace,
    block_embedding_norm,
    inner_norm,
    mixed_norm,
    mixed_norm_rows,
)

__all__ = [
    "BernsteinEstimate",
    "HolderGap",
    "FlatVector",
    "fss_upper_bound",
    "linfty_lp_upper_bound",
    "holder_interpolation_gap",
    "diagonal_interpolation_gap",
    "subspace_infimum",
    "bruteforce_bernstein",
    "bernstein_profile",
    "flatness_search",
    "CERTIFY_TOL",
    "FORMULA_TOL",
]

CERTIFY_TOL = 1e-6
FORMULA_TOL = 1e-4

MAX_DIM = 12
MAX_N = 4


# ---------------------------------------------------------------------------
# closed forms


def _fss_exponent(P0: SpaceParams, P1: SpaceParams) -> float:
    p0, q0, p1, q1 = P0.p, P0.q, P1.p, P1.q
    if is_inf(p0) or is_inf(q0):
        raise ValueError("source exponents must be finite")
    if not (p0 < p1 and q0 < q1):
        raise ValueError("bound needs p0 < p1 and q0 < q1")
    ratio = max(q0 * recip(q1), p0 * recip(p1))
    return min(recip(p0), recip(q0)) * (1 - ratio)


def fss_upper_bound(n: int, P0: SpaceParams, P1: SpaceParams) -> float:
    """``n^(-min(1/p0, 1/q0) * (1 - max(q0/q1, p0/p1)))`` for ``l^q0(l^p0) -> l^q1(l^p1)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    e = _fss_exponent(P0, P1)
    return float(n) ** (-float(e))


def linfty_lp_upper_bound(n: int, p) -> float:
    """``n^(-1/max(p, 2))``: Bernstein bound for ``L^inf[0,1] -> L^p[0,1]``."""
    p = parse_exponent(p)
    if is_inf(p):
        raise ValueError("p must be finite")
    if n < 1:
        raise ValueError("n must be >= 1")
    return float(n) ** (-1.0 / max(float(p), 2.0))


class HolderGap(NamedTuple):
    lhs: float
    rhs: float


def _unweighted(x: SeqVector, p, q) -> TruncatedMixedSpace:
    return TruncatedMixedSpace.uniform(range(len(x.blocks)), [b.size for b in x.blocks], p, q)


def _div(p, theta):
    return INF if is_inf(p) else p / theta


def holder_interpolation_gap(x: SeqVector, p, q, theta) -> HolderGap:
    """Both sides of ``||x||_{l^(q/t)(l^(p/t))} <= ||x||_{l^q(l^p)}^t * ||x||_inf^(1-t)``."""
    p, q = parse_exponent(p), parse_exponent(q)
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    lhs = mixed_norm(x, _unweighted(x, _div(p, theta), _div(q, theta)))
    base = mixed_norm(x, _unweighted(x, p, q))
    sup = x.sup()
    rhs = base ** theta * sup ** (1 - theta) if base and sup else 0.0
    return HolderGap(lhs, rhs)


def diagonal_interpolation_gap(x: SeqVector, factors, p, q, inner=2) -> HolderGap:
    """Both sides of ``||T x||_q^q <= ||x||_p^p * sup_j (c_j ||x_j||)^(q - p)``.

    ``T`` multiplies block ``j`` by ``factors[j]`` (assumed ``<= 1``); block
    norms use the exponent ``inner``. Requires ``p < q < inf``.
    """
    p, q = float(parse_exponent(p)), float(parse_exponent(q))
    if not p < q < INF:
        raise ValueError("need p < q < inf")
    c = np.asarray(factors, dtype=float)
    norms = np.array([inner_norm(b, inner) for b in x.blocks])
    lhs = math.fsum(((c * norms) ** q).tolist())
    rhs = math.fsum((norms ** p).tolist()) * float(np.max(c * norms)) ** (q - p)
    return HolderGap(lhs, rhs)


# ---------------------------------------------------------------------------
# inner infimum over a fixed subspace


class _RowNorm:
    """Batched mixed norm for the search loops: one ``reduceat`` per level sum.

    Skips the overflow-safe rescaling of :func:`mixed_norm_rows`; the search
    only sees vectors of moderate size, and reported values are re-evaluated
    with the careful version.
    """

    def __init__(self, sp: TruncatedMixedSpace):
        self.space = sp
        self.starts = np.array(sp.offsets[:-1])
        self.w = sp.weights
        self.p = None if is_inf(sp.inner_p) else float(sp.inner_p)
        self.q = None if is_inf(sp.outer_q) else float(sp.outer_q)

    def __call__(self, X):
        A = np.abs(X)
        if self.p is None:
            inner = np.maximum.reduceat(A, self.starts, axis=1)
        else:
            inner = np.add.reduceat(A ** self.p, self.starts, axis=1) ** (1 / self.p)
        lv = inner * self.w
        if self.q is None:
            return lv.max(axis=1)
        return (lv ** self.q).sum(axis=1) ** (1 / self.q)


    @classmethod
    def of(cls, sp) -> "_RowNorm":
        return sp if isinstance(sp, cls) else cls(sp)


def _ratios(src: _RowNorm, dst: _RowNorm, basis, C, careful=False) -> np.ndarray:
    X = np.atleast_2d(C) @ basis.T
    if careful:
        den, num = mixed_norm_rows(X, src.space), mixed_norm_rows(X, dst.space)
    else:
        den, num = src(X), dst(X)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = num / den
    return np.where(den > 0, out, np.inf)


def _circle_infimum(src, dst, basis, samples: int, polish: bool):
    theta = np.pi * np.arange(samples) / samples
    C = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    vals = _ratios(src, dst, basis, C)
    k = int(np.argmin(vals))
    best, best_t = float(vals[k]), float(theta[k])
    if not polish:
        return best, C[k]
    h = np.pi / samples

    def f(t):
        return float(_ratios(src, dst, basis, np.array([math.cos(t), math.sin(t)]))[0])

    # every sampled local minimum within reach of the global sample minimum
    left, right = np.roll(vals, 1), np.roll(vals, -1)
    cand = np.flatnonzero((vals <= left) & (vals <= right))
    cand = cand[np.argsort(vals[cand])][:8]
    for i in cand:
        t0 = float(theta[i])
        res = optimize.minimize_scalar(
            f, bounds=(t0 - h, t0 + h), method="bounded", options={"xatol": 1e-13}
        )
        if res.fun < best:
            best, best_t = float(res.fun), float(res.x)
    return best, np.array([math.cos(best_t), math.sin(best_t)])


def _sphere_starts(n: int, count: int, rng) -> np.ndarray:
    Z = rng.standard_normal((count, n))
    return Z / np.linalg.norm(Z, axis=1, keepdims=True)


def _descend(src, dst, basis, starts: np.ndarray, iters: int = 40):
    """Projected finite-difference descent on the unit sphere, all starts at once."""
    C = starts.copy()
    K, n = C.shape
    f = _ratios(src, dst, basis, C)
    step = np.full(K, 0.2)
    h = 1e-7
    E = np.eye(n)
    for _ in range(iters):
        P = (C[:, None, :] + h * E[None, :, :]).reshape(-1, n)
        fp = _ratios(src, dst, basis, P).reshape(K, n)
        g = (fp - f[:, None]) / h
        g -= (g * C).sum(axis=1, keepdims=True) * C
        gn = np.linalg.norm(g, axis=1, keepdims=True)
        gn[gn == 0] = 1.0
        Cn = C - step[:, None] * g / gn
        Cn /= np.linalg.norm(Cn, axis=1, keepdims=True)
        fn = _ratios(src, dst, basis, Cn)
        better = fn < f
        C[better], f[better] = Cn[better], fn[better]
        step = np.where(better, np.minimum(step * 1.5, 1.0), step * 0.5)
    return C, f


def _polish(src, dst, basis, c0):
    def fun(c):
        nrm = np.linalg.norm(c)
        if nrm == 0:
            return np.inf
        return float(_ratios(src, dst, basis, c / nrm)[0])

    res = optimize.minimize(
        fun, c0, method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000, "maxfev": 8000},
    )
    c = res.x / np.linalg.norm(res.x)
    return float(res.fun), c


def subspace_infimum(
    src: TruncatedMixedSpace,
    dst: TruncatedMixedSpace,
    basis,
    *,
    samples: int = 10_000,
    starts: Optional[np.ndarray] = None,
    n_starts: int = 64,
    seed: int = 0,
    polish: bool = True,
):
    """``inf ||x||_dst / ||x||_src`` over the span of the columns of ``basis``.

    One-dimensional spans are evaluated directly, planes by a dense angular
    grid (``samples`` directions) with bounded Brent refinement, and higher
    dimensions by projected descent from ``n_starts`` random starts followed by
    a Nelder-Mead polish. Returns ``(value, coefficients)``.
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim == 1:
        basis = basis[:, None]
    src, dst = _RowNorm.of(src), _RowNorm.of(dst)
    n = basis.shape[1]
    if n == 1:
        return float(_ratios(src, dst, basis, np.ones((1, 1)), careful=True)[0]), np.ones(1)
    if n == 2:
        best, best_c = _circle_infimum(src, dst, basis, samples, polish)
    else:
        best, best_c = _sphere_infimum(src, dst, basis, starts, n_starts, seed, polish)
    if polish:
        best = float(_ratios(src, dst, basis, best_c, careful=True)[0])
    return best, best_c


def _sphere_infimum(src, dst, basis, starts, n_starts, seed, polish):
    n = basis.shape[1]
    if starts is None:
        starts = _sphere_starts(n, max(n_starts, 64), np.random.default_rng(seed))
    C, f = _descend(src, dst, basis, starts)
    order = np.argsort(f, kind="stable")
    best, best_c = float(f[order[0]]), C[order[0]]
    if polish:
        for i in order[:4]:
            val, c = _polish(src, dst, basis, C[i])
            if val < best:
                best, best_c = val, c
    return best, best_c


# ---------------------------------------------------------------------------
# outer supremum


@dataclass
class BernsteinEstimate:
    """Bounds on ``b_n``: ``lower <= b_n <= upper``; ``oracle`` is the search value."""

    n: int
    lower: float
    upper: float = INF
    oracle: Optional[float] = None
    witness_basis: Optional[np.ndarray] = None
    seed: Optional[int] = None
    src: Optional[TruncatedMixedSpace] = field(default=None, repr=False)
    dst: Optional[TruncatedMixedSpace] = field(default=None, repr=False)

    def certify(self, samples: int = 40_000, seed: int = 12345) -> float:
        """Re-evaluate the infimum over the witness span independently of the search."""
        if self.witness_basis is None or self.src is None or self.dst is None:
            raise ValueError("no witness to certify")
        val, _ = subspace_infimum(self.src, self.dst, self.witness_basis, samples=samples, n_starts=128, seed=seed)
        return val

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "lower": self.lower,
            "upper": None if is_inf(self.upper) else self.upper,
            "oracle": self.oracle,
            "witness": None if self.witness_basis is None else self.witness_basis.tolist(),
            "seed": self.seed,
        }


def _orthonormal(B: np.ndarray) -> np.ndarray:
    Q, R = np.linalg.qr(B)
    # fix the sign ambiguity of QR so the representation is deterministic
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def formula_upper_bound(n: int, src: TruncatedMixedSpace, dst: TruncatedMixedSpace) -> float:
    """Best closed-form upper bound available for the pair; ``inf`` if none applies.

    Combines ``b_n <= b_1 = ||id||`` with the mixed-norm power bound when both
    spaces carry identical weights (the bound is invariant under a common
    reweighting) and ``p0 < p1``, ``q0 < q1``.
    """
    if not src.same_structure(dst):
        return INF
    bound = block_embedding_norm(src, dst)
    same_weights = all(a.log2_weight == b.log2_weight for a, b in zip(src.levels, dst.levels))
    P0 = SpaceParams(src.inner_p, src.outer_q)
    P1 = SpaceParams(dst.inner_p, dst.outer_q)
    if same_weights and not (is_inf(P0.p) or is_inf(P0.q)) and P0.p < P1.p and P0.q < P1.q:
        bound = min(bound, fss_upper_bound(n, P0, P1))
    return bound


def _candidates(D: int, n: int, budget: int, rng) -> list:
    combos_total = math.comb(D, n)
    n_coord = min(combos_total, budget // 2)
    if n_coord == combos_total:
        combos = list(itertools.combinations(range(D), n))
    else:
        picked = set()
        combos = []
        while len(combos) < n_coord:
            c = tuple(sorted(rng.choice(D, size=n, replace=False).tolist()))
            if c not in picked:
                picked.add(c)
                combos.append(c)
    out = []
    for c in combos:
        B = np.zeros((D, n))
        B[list(c), range(n)] = 1.0
        out.append(B)
    while len(out) < budget:
        out.append(_orthonormal(rng.standard_normal((D, n))))
    return out


def _coordinate_ascent(value, B, best, step=0.25, min_step=1e-3, max_sweeps=4):
    D, n = B.shape
    sweeps = 0
    while step >= min_step and sweeps < max_sweeps:
        improved = False
        for i in range(D):
            for k in range(n):
                for sgn in (1.0, -1.0):
                    T = B.copy()
                    T[i, k] += sgn * step
                    if np.linalg.matrix_rank(T) < n:
                        continue
                    T = _orthonormal(T)
                    v = value(T)
                    if v > best + 1e-12:
                        B, best, improved = T, v, True
        sweeps += 1
        if not improved:
            step /= 2
    return B, best


def _maximise_line(src, dst, B):
    """For ``n = 1`` the inner infimum is the ratio itself; maximise it directly."""

    def fun(b):
        return -float(_ratios(src, dst, b[:, None], np.ones((1, 1)))[0])

    res = optimize.minimize(fun, B[:, 0], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20_000, "maxfev": 40_000})
    b = res.x / np.linalg.norm(res.x)
    return b[:, None] if -fun(b) >= -fun(B[:, 0]) else B


def bruteforce_bernstein(
    src: TruncatedMixedSpace,
    dst: TruncatedMixedSpace,
    n: int,
    budget: int = 200,
    seed: int = 0,
    *,
    refine_top: int = 4,
    samples: int = 10_000,
    n_starts: int = 64,
) -> BernsteinEstimate:
    """Random-restart sup-inf search for ``b_n(src -> dst)`` on small truncations.

    Candidates are coordinate subspaces (up to half the budget) and random
    orthonormal frames; the ``refine_top`` best are improved by coordinate-wise
    ascent on the basis entries, then re-evaluated with a polished inner
    infimum. Deterministic for a given seed.
    """
    D = src.dim
    if not src.same_structure(dst):
        raise ValueError("source and target must share their block structure")
    if D > MAX_DIM:
        raise ValueError(f"total dimension {D} exceeds {MAX_DIM}")
    if not 1 <= n <= min(MAX_N, D):
        raise ValueError(f"n must lie in [1, {min(MAX_N, D)}]")
    if budget < 1:
        raise ValueError("budget must be positive")

    rng = np.random.default_rng(seed)
    starts = _sphere_starts(n, n_starts, rng) if n >= 3 else None
    fsrc, fdst = _RowNorm(src), _RowNorm(dst)

    def search_value(B):
        return subspace_infimum(fsrc, fdst, B, samples=samples, starts=starts, polish=False)[0]

    cands = _candidates(D, n, budget, rng)
    values = np.array([search_value(B) for B in cands])
    order = sorted(range(len(cands)), key=lambda i: (-values[i], i))

    finals = []
    for rank, i in enumerate(order[:refine_top]):
        B, v = _coordinate_ascent(search_value, cands[i], float(values[i]))
        if n == 1:
            B = _maximise_line(fsrc, fdst, B)
        precise, _ = subspace_infimum(fsrc, fdst, B, samples=samples, starts=starts, polish=True)
        finals.append((precise, rank, B))
    best_val, _, best_B = max(finals, key=lambda t: (t[0], -t[1]))
    return BernsteinEstimate(
        n=n,
        lower=best_val,
        upper=formula_upper_bound(n, src, dst),
        oracle=best_val,
        witness_basis=best_B,
        seed=seed,
        src=src,
        dst=dst,
    )


def bernstein_profile(src, dst, nmax: int, budget: int = 200, seed: int = 0, **kw) -> list:
    """Estimates for ``n = 1..nmax`` with the same seed."""
    return [bruteforce_bernstein(src, dst, n, budget, seed, **kw) for n in range(1, nmax + 1)]


# ---------------------------------------------------------------------------
# flat vectors


@dataclass
class FlatVector:
    """A vector of sup-norm 1 in a span and the number of coordinates where ``|x_k| = 1``."""

    vector: np.ndarray
    flat_count: int
    exact: bool
    sup_bound: Optional[float] = None

    @property
    def bound_holds(self) -> Optional[bool]:
        if self.sup_bound is None:
            return None
        return 1.0 <= self.sup_bound * (1 + 1e-12) + 1e-12


def _flat_count(x, tol) -> int:
    return int(np.sum(np.abs(x) >= 1 - tol))


def _lp_point(B, S, signs, tol):
    D, n = B.shape
    rest = [k for k in range(D) if k not in S]
    A_ub = np.vstack([B[rest], -B[rest]]) if rest else None
    b_ub = np.ones(2 * len(rest)) if rest else None
    res = optimize.linprog(
        np.zeros(n), A_ub=A_ub, b_ub=b_ub, A_eq=B[list(S)], b_eq=np.asarray(signs, float),
        bounds=[(None, None)] * n, method="highs",
    )
    if res.status != 0:
        return None
    return B @ res.x


def _exact_flat(B, tol):
    D, n = B.shape
    for k in range(D, 0, -1):
        for S in itertools.combinations(range(D), k):
            BS = B[list(S)]
            rank = np.linalg.matrix_rank(BS, tol=1e-10)
            for tail in itertools.product((1.0, -1.0), repeat=k - 1):
                signs = np.array((1.0,) + tail)
                c, *_ = np.linalg.lstsq(BS, signs, rcond=None)
                if np.max(np.abs(BS @ c - signs)) > 1e-9:
                    continue
                if rank == n:
                    x = B @ c
                    if np.max(np.abs(x)) <= 1 + tol:
                        return x
                else:
                    x = _lp_point(B, S, signs, tol)
                    if x is not None:
                        return x
    raise AssertionError("unreachable: some vertex always exists")  # pragma: no cover


def _random_flat(B, tol, rng, trials):
    D, n = B.shape
    A_ub = np.vstack([B, -B])
    b_ub = np.ones(2 * D)
    best = None
    for _ in range(trials):
        c = rng.standard_normal(n)
        res = optimize.linprog(-c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * n, method="highs-ds")
        if res.status != 0:
            continue
        x = B @ res.x
        if best is None or _flat_count(x, tol) > _flat_count(best, tol):
            best = x
    return best


def flatness_search(basis, tolerance: float = 1e-9, *, space: Optional[TruncatedMixedSpace] = None,
                    seed: int = 0, trials: int = 64) -> FlatVector:
    """Find a vector in ``span(basis)`` whose absolute maximum is attained as often as possible.

    Every ``n``-dimensional span contains such a vector with at least ``n``
    maximal coordinates: the vertices of ``{c : ||B c||_inf <= 1}`` have
    ``n`` active constraints. Up to 8 ambient coordinates all sign patterns are
    enumerated (exact maximum); above that, random linear objectives are
    maximised over the polytope and the best vertex kept.

    With ``space`` given, the bound
    ``||x||_inf <= k^(-1/max(p, q)) * ||x||_{l^q(l^p)}`` (unit weights, ``k`` the
    flat count) is evaluated and stored in ``sup_bound``.
    """
    B = np.asarray(basis, dtype=float)
    if B.ndim == 1:
        B = B[:, None]
    D, n = B.shape
    if n > D or np.linalg.matrix_rank(B) < n:
        raise ValueError("basis must have full column rank")
    if D <= 8:
        x, exact = _exact_flat(B, tolerance), True
    else:
        x, exact = _random_flat(B, tolerance, np.random.default_rng(seed), trials), False
    x = x / np.max(np.abs(x))
    # snap coordinates that are flat up to the tolerance
    near = np.abs(np.abs(x) - 1) <= tolerance
    x[near] = np.sign(x[near])
    k = _flat_count(x, tolerance)
    sup_bound = None
    if space is not None:
        unit = TruncatedMixedSpace.uniform(space.js, space.block_sizes, space.inner_p, space.outer_q)
        r = max(float(recip(space.inner_p)), 0.0), max(float(recip(space.outer_q)), 0.0)
        # 1/max(p, q) = min(1/p, 1/q)
        sup_bound = k ** (-min(r)) * mixed_norm(x, unit)
    return FlatVector(x, k, exact, sup_bound)
