import json
import math
from fractions import Fraction

import numpy as np
import pytest

from besov_singular import INF, SeqVector, SpaceParams
from besov_singular.bernstein import (
    CERTIFY_TOL,
    bernstein_profile,
    bruteforce_bernstein,
    diagonal_interpolation_gap,
    flatness_search,
    fss_upper_bound,
    holder_interpolation_gap,
    linfty_lp_upper_bound,
    subspace_infimum,
)
from besov_singular.spaces import block_embedding_norm, mixed_norm

from conftest import uniform_space

P = SpaceParams
HALF = Fraction(1, 2)


def test_fss_upper_bound_examples():
    assert fss_upper_bound(1, P(1, 1), P(2, 2)) == 1.0
    assert fss_upper_bound(16, P(1, 1), P(2, 2)) == 0.25
    assert fss_upper_bound(81, P(2, 1), P(4, INF)) == pytest.approx(1 / 3, rel=1e-15)


def test_fss_upper_bound_decreasing_to_zero():
    vals = [fss_upper_bound(n, P(HALF, 1), P(1, 2)) for n in (1, 2, 10, 10**3, 10**9)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-3


@pytest.mark.parametrize("P0, P1", [(P(2, 1), P(1, 2)), (P(1, 2), P(2, 1)), (P(1, 1), P(1, 2)), (P(INF, 1), P(INF, 2))])
def test_fss_upper_bound_rejects_outside_hypotheses(P0, P1):
    with pytest.raises(ValueError):
        fss_upper_bound(4, P0, P1)


def test_linfty_lp_examples():
    assert linfty_lp_upper_bound(1, 3) == 1.0
    assert linfty_lp_upper_bound(16, 2) == 0.25
    assert linfty_lp_upper_bound(16, 4) == 0.5
    assert linfty_lp_upper_bound(16, 1) == 0.25
    with pytest.raises(ValueError):
        linfty_lp_upper_bound(4, INF)


def test_holder_examples():
    atom = SeqVector([[0.0, 1.0], [0.0]])
    for p, q, t in [(1, 1, 0.5), (HALF, 2, 0.25), (2, HALF, 0.75)]:
        lhs, rhs = holder_interpolation_gap(atom, p, q, t)
        assert lhs == rhs == 1.0
    lhs, rhs = holder_interpolation_gap(SeqVector([[1.0, 1.0]]), 1, 1, 0.5)
    assert lhs == pytest.approx(math.sqrt(2), rel=1e-15)
    assert rhs == pytest.approx(math.sqrt(2), rel=1e-15)
    with pytest.raises(ValueError):
        holder_interpolation_gap(atom, 1, 1, 1.0)


def test_holder_random(rng):
    for p in (HALF, 1, 2, INF):
        for q in (HALF, 1, 2, INF):
            for t in (0.25, 0.5, 0.75):
                for _ in range(50):
                    x = SeqVector([rng.standard_normal(3), rng.standard_normal(2)])
                    lhs, rhs = holder_interpolation_gap(x, p, q, t)
                    assert lhs <= rhs + 1e-12


def test_diagonal_interpolation_random(rng):
    for p, q in [(1, 2), (HALF, 1), (2, 4)]:
        for _ in range(300):
            blocks = [rng.standard_normal(m) for m in (1, 2, 3, 4)]
            c = rng.random(4)
            lhs, rhs = diagonal_interpolation_gap(SeqVector(blocks), c, p, q)
            assert lhs <= rhs * (1 + 1e-12)


def test_bruteforce_examples():
    l2 = uniform_space([2], 2, 2)
    l1 = uniform_space([2], 1, 1)
    assert bruteforce_bernstein(l2, l2, 2, budget=10, seed=0).oracle == pytest.approx(1.0, abs=1e-12)
    assert bruteforce_bernstein(l1, l2, 1, budget=10, seed=0).oracle == pytest.approx(1.0, abs=1e-12)
    assert bruteforce_bernstein(l1, l2, 2, budget=10, seed=0).oracle == pytest.approx(1 / math.sqrt(2), abs=1e-9)


def test_bruteforce_errors():
    big = uniform_space([7, 6], 1, 1)
    with pytest.raises(ValueError):
        bruteforce_bernstein(big, big, 1)
    sp = uniform_space([3], 1, 1)
    with pytest.raises(ValueError):
        bruteforce_bernstein(sp, sp, 4)
    with pytest.raises(ValueError):
        bruteforce_bernstein(sp, sp, 1, budget=0)
    with pytest.raises(ValueError):
        bruteforce_bernstein(sp, uniform_space([2, 1], 1, 1), 1)


def test_bruteforce_deterministic_and_certified():
    src, dst = uniform_space([2, 2], 1, 1), uniform_space([2, 2], 2, 2)
    a = bruteforce_bernstein(src, dst, 2, budget=30, seed=3)
    b = bruteforce_bernstein(src, dst, 2, budget=30, seed=3)
    assert a.to_json() == b.to_json()
    assert a.lower <= a.oracle + 1e-9
    assert abs(a.certify() - a.lower) <= CERTIFY_TOL
    data = json.loads(json.dumps(a.to_json()))
    assert set(data) == {"n", "lower", "upper", "oracle", "witness", "seed"}
    assert np.array(data["witness"]).shape == (4, 2)


@pytest.mark.parametrize("p0, q0, p1, q1", [(1, 1, 2, 2), (HALF, 1, 1, 2), (1, HALF, 2, 1), (2, 1, INF, 4)])
def test_oracle_below_formula_and_monotone(p0, q0, p1, q1):
    src, dst = uniform_space([2, 2], p0, q0), uniform_space([2, 2], p1, q1)
    ests = bernstein_profile(src, dst, 3, budget=40, seed=1)
    for e in ests:
        assert e.oracle <= fss_upper_bound(e.n, P(p0, q0), P(p1, q1)) + 1e-6
    for a, b in zip(ests, ests[1:]):
        assert b.oracle <= a.oracle + 1e-9
    assert ests[0].oracle == pytest.approx(block_embedding_norm(src, dst), abs=1e-4)


@pytest.mark.parametrize("p0, q0, p1, q1", [(2, 1, 1, 2), (INF, 2, 1, 1), (1, 2, 2, 1)])
def test_b1_is_operator_norm_with_weights(p0, q0, p1, q1):
    src = uniform_space([1, 2], p0, q0, [1.0, 0.5])
    dst = uniform_space([1, 2], p1, q1, [2.0, 1.0])
    e = bruteforce_bernstein(src, dst, 1, budget=60, seed=2)
    assert e.oracle == pytest.approx(block_embedding_norm(src, dst), abs=1e-4)


def test_subspace_infimum_matches_dense_sampling(rng):
    src, dst = uniform_space([3], 1, 1), uniform_space([3], 2, 2)
    B = np.linalg.qr(rng.standard_normal((3, 3)))[0]
    val, c = subspace_infimum(src, dst, B, seed=0)
    Z = rng.standard_normal((100_000, 3))
    brute = np.min([mixed_norm(z @ B.T, dst) / mixed_norm(z @ B.T, src) for z in Z[:5000]])
    assert val <= brute + 1e-9
    assert val == pytest.approx(1 / math.sqrt(3), abs=1e-7)


def test_flatness_examples():
    f = flatness_search([[1.0], [1.0]])
    assert f.flat_count == 2 and np.allclose(np.abs(f.vector), 1)
    assert flatness_search([[1.0], [0.0]]).flat_count == 1
    f = flatness_search(np.array([[1, 0], [0, 1], [-1, 1]], float))
    assert f.flat_count == 2 and np.allclose(f.vector, [1, 1, 0])
    with pytest.raises(ValueError):
        flatness_search(np.array([[1, 2], [2, 4]], float))


def test_flatness_at_least_n(rng):
    for D, n in [(5, 2), (8, 3), (12, 4), (16, 5)]:
        for _ in range(5):
            B = rng.standard_normal((D, n))
            sp = uniform_space([D], 1, 2)
            f = flatness_search(B, space=sp, seed=0)
            assert f.flat_count >= n
            assert np.max(np.abs(f.vector)) == 1.0
            c, *_ = np.linalg.lstsq(B, f.vector, rcond=None)
            assert np.allclose(B @ c, f.vector, atol=1e-8)
            assert f.bound_holds
