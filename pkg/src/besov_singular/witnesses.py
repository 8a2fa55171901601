"""Explicit subspaces that keep Bernstein numbers away from zero.

* Rademacher sums inside probability-normalised blocks (the non-FSS mechanism
  for ``p1 < p0``).
* Diagonal spans ``span{x_j (x) e_j}`` with one fixed unit vector per level.
* Constant blocks, on which probability-normalised norms do not depend on ``p``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from .exponents import INF, is_inf, parse_exponent
from .spaces import SeqVector, TruncatedMixedSpace, inner_norm, mixed_norm

__all__ = [
    "RademacherSystem",
    "rademacher_system",
    "khintchine_ratio",
    "rademacher_witness",
    "rademacher_witness_lower_bound",
    "diagonal_witness_basis",
    "level_norms",
    "constant_block_witness",
    "basis_to_csv",
    "basis_to_json",
]

MAX_RADEMACHER = 20


@dataclass(frozen=True)
class RademacherSystem:
    """``n`` Rademacher functions on ``{-1, 1}^n`` with the uniform measure.

    ``signs[k, j]`` is the value of ``r_j`` at sample point ``k``; sample point
    ``k`` is the binary expansion of ``k`` with digit 0 read as ``-1``.
    """

    n: int
    signs: np.ndarray

    @property
    def weight(self) -> float:
        return 2.0 ** -self.n

    def values(self, a) -> np.ndarray:
        """Sample values of ``sum_j a_j r_j`` (one column per coefficient vector if ``a`` is 2-D)."""
        return self.signs @ np.asarray(a, dtype=float)

    def lp_norm(self, a, p) -> float:
        return _lp(self.values(a), parse_exponent(p))


def rademacher_system(n: int) -> RademacherSystem:
    if not 1 <= n <= MAX_RADEMACHER:
        raise ValueError(f"n must lie in [1, {MAX_RADEMACHER}]")
    k = np.arange(2 ** n)[:, None]
    bits = (k >> np.arange(n)[None, :]) & 1
    signs = (2 * bits - 1).astype(float)
    signs.setflags(write=False)
    return RademacherSystem(n, signs)


def _lp(vals: np.ndarray, p, axis=0):
    """``L^p`` norm of sample values under the uniform probability measure."""
    a = np.abs(vals)
    if is_inf(p):
        return a.max(axis=axis)
    p = float(p)
    top = a.max(axis=axis, keepdims=True)
    safe = np.where(top > 0, top, 1.0)
    out = np.squeeze(safe, axis=axis) * np.mean((a / safe) ** p, axis=axis) ** (1 / p)
    return np.where(np.squeeze(top, axis=axis) > 0, out, 0.0)


def khintchine_ratio(a, p, sys: RademacherSystem | None = None) -> float:
    """``||sum a_j r_j||_{L^p} / ||a||_2`` by enumerating every sample point."""
    a = np.asarray(a, dtype=float)
    if not np.any(a):
        raise ValueError("coefficient vector must be nonzero")
    sys = sys or rademacher_system(len(a))
    if sys.n != len(a):
        raise ValueError("coefficient length does not match the system")
    return float(_lp(sys.values(a), parse_exponent(p))) / float(np.linalg.norm(a))


def _witness_ratio(sys, A, p0, p1):
    V = sys.values(A.T)
    return _lp(V, p1) / _lp(V, p0)


def rademacher_witness(n: int, p0, p1, directions: int = 4096, seed: int = 0):
    """Minimise ``||f||_{L^p1} / ||f||_{L^p0}`` over ``f`` in the Rademacher span.

    Returns ``(value, coefficients)``. Planes are optimised over the circle to
    full precision; larger spans by Sobol directions plus Nelder-Mead.
    """
    p0, p1 = parse_exponent(p0), parse_exponent(p1)
    if is_inf(p0) or is_inf(p1):
        raise ValueError("p0 and p1 must be finite")
    if p0 < p1:
        raise ValueError("need p1 <= p0")
    if directions < 1:
        raise ValueError("directions must be positive")
    sys = rademacher_system(n)
    if p0 == p1 or n == 1:
        return 1.0, np.eye(n)[0]
    if n == 2:
        return _circle_min(sys, float(p0), float(p1))
    sampler = stats.qmc.Sobol(d=n, scramble=True, seed=seed)
    U = sampler.random(directions)
    A = stats.norm.ppf(np.clip(U, 1e-12, 1 - 1e-12))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    vals = _witness_ratio(sys, A, float(p0), float(p1))
    order = np.argsort(vals, kind="stable")
    best, best_a = float(vals[order[0]]), A[order[0]]

    def fun(a):
        nrm = np.linalg.norm(a)
        if nrm == 0:
            return np.inf
        return float(_witness_ratio(sys, (a / nrm)[None, :], float(p0), float(p1))[0])

    for i in order[:5]:
        res = optimize.minimize(fun, A[i], method="Nelder-Mead",
                                options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 4000})
        if res.fun < best:
            best, best_a = float(res.fun), res.x / np.linalg.norm(res.x)
    return best, best_a


def _circle_min(sys, p0, p1):
    # The ratio is symmetric under a -> (a2, a1) and sign changes, so it is
    # enough to scan t in [0, pi/4]; a dense scan plus Brent pins the minimum,
    # which for p1 < p0 sits at an endpoint.
    def f(t):
        a = np.array([[math.cos(t), math.sin(t)]])
        return float(_witness_ratio(sys, a, p0, p1)[0])

    ts = np.linspace(0.0, math.pi / 4, 2049)
    vals = np.array([f(t) for t in ts])
    k = int(np.argmin(vals))
    lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
    res = optimize.minimize_scalar(f, bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
    t = float(res.x) if res.fun < vals[k] else float(ts[k])
    best = min(float(res.fun), float(vals[k]))
    return best, np.array([math.cos(t), math.sin(t)])


def rademacher_witness_lower_bound(n: int, p0, p1, directions: int = 4096, seed: int = 0) -> float:
    """Infimum of ``||.||_{L^p1} / ||.||_{L^p0}`` over the span of ``r_1..r_n``.

    In the probability-normalised block ``2^(-n/p) l^p{1..2^n}`` this is a lower
    bound for ``b_n`` of the block embedding with ``p1 <= p0``.
    """
    return rademacher_witness(n, p0, p1, directions, seed)[0]


def diagonal_witness_basis(sp_src: TruncatedMixedSpace, sp_dst: TruncatedMixedSpace, unit_blocks) -> np.ndarray:
    """Columns ``x_j (x) e_j``: block ``j`` carries ``unit_blocks[j]``, all others zero.

    Each block must have weighted source norm ``w_j ||x_j||_p = 1``.
    """
    if not sp_src.same_structure(sp_dst):
        raise ValueError("source and target must share their block structure")
    if len(unit_blocks) != len(sp_src.levels):
        raise ValueError("need one block vector per level")
    B = np.zeros((sp_src.dim, len(unit_blocks)))
    for k, (lvl, sl, x) in enumerate(zip(sp_src.levels, sp_src.level_slices(), unit_blocks)):
        x = np.asarray(x, dtype=float)
        if x.shape != (lvl.size,):
            raise ValueError(f"block {k} has length {x.shape[0]}, expected {lvl.size}")
        nrm = lvl.weight * inner_norm(x, sp_src.inner_p)
        if abs(nrm - 1) > 1e-12:
            raise ValueError(f"block {k} is not a unit vector in the source (norm {nrm!r})")
        B[sl, k] = x
    return B


def level_norms(space: TruncatedMixedSpace, basis) -> np.ndarray:
    """Norm of each basis column in ``space`` (per-level contraction factors for diagonal witnesses)."""
    basis = np.asarray(basis, dtype=float)
    return np.array([mixed_norm(basis[:, k], space) for k in range(basis.shape[1])])


def constant_block_witness(levels, p, n_dim: int = 1) -> np.ndarray:
    """Columns ``1_{block j}``; each has norm 1 in ``2^(-j n/p) l^p{1..2^(jn)}`` for every ``p``.

    ``levels`` is a list of ``(j, block_size)`` with ``block_size == 2^(j n_dim)``.
    ``p`` is accepted for symmetry with the weighted space; the basis does not
    depend on it.
    """
    parse_exponent(p)
    sizes = []
    for j, m in levels:
        if m != 2 ** (j * n_dim):
            raise ValueError(f"level {j}: block size {m} != 2^({j}*{n_dim})")
        sizes.append(m)
    B = np.zeros((sum(sizes), len(sizes)))
    off = 0
    for k, m in enumerate(sizes):
        B[off:off + m, k] = 1.0
        off += m
    return B


def basis_to_csv(basis) -> str:
    """Rows are ambient coordinates, columns basis vectors."""
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"v{k}" for k in range(basis.shape[1])])
    for row in basis:
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def basis_to_json(basis) -> str:
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    return json.dumps({"rows": basis.shape[0], "cols": basis.shape[1], "basis": basis.tolist()})
