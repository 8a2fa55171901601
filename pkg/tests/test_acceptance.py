"""Acceptance criteria, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import itertools
import math
import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from besov_singular import (
    INF,
    Setting,
    SeqVector,
    SpaceParams as P,
    TruncatedMixedSpace,
    Verdict as V,
    block_embedding_norm,
    classify,
    classify_domain,
    classify_homogeneous,
    classify_rn,
    embedding_flags,
)
from besov_singular.bernstein import bruteforce_bernstein, holder_interpolation_gap
from besov_singular.exponents import recip
from besov_singular.haar import (
    PiecewiseConstant,
    counting_constant,
    haar_analyze,
    haar_synthesize,
    parseval_sum,
    support_index_sets,
)
from besov_singular.hump import BasisOracle, OracleExhausted, glide, random_sparse_basis
from besov_singular.witnesses import rademacher_witness_lower_bound

HALF = F(1, 2)
QUARTER = F(1, 4)


def report(k, ok, detail=""):
    print(f"criterion {k}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())


def test_criterion_1_classification_totality():
    values = [HALF, F(1), F(2), F(4), INF]
    tuples = []
    for n in (1, 2):
        for p0, q0, p1, q1 in itertools.product(values, repeat=4):
            g = max(F(0), n * recip(p0) - n * recip(p1))
            for d in (g - 1, g - F(1, 8), g, g + F(1, 8), g + 1):
                tuples.append((P(p0, q0, d, n), P(p1, q1, 0, n)))
    t0 = time.perf_counter()
    bad = []
    for P0, P1 in tuples:
        for setting in Setting:
            r = classify(P0, P1, setting)
            f = r.flags
            ok = (
                sum(r.verdict is v for v in V) == 1
                and (not f["compact"] or f["fss"])
                and (not f["fss"] or f["ss"])
                and (not f["ss"] or f["embeds"])
                and tuple(embedding_flags(P0, P1, setting)) == (r.embeds, r.compact)
            )
            if setting is Setting.Rn:
                ok = ok and r.verdict is not V.SSNotFSS
            if setting is Setting.Homogeneous:
                ok = ok and r.verdict not in (V.Compact, V.SSNotFSS)
            if not ok:
                bad.append((P0, P1, setting))
    elapsed = time.perf_counter() - t0
    ok = len(tuples) >= 5000 and not bad and elapsed < 5
    report(1, ok, f"{len(tuples)} tuples x 3 settings, {len(bad)} bad, {elapsed:.2f}s")
    assert len(tuples) >= 5000
    assert not bad, bad[:5]
    assert elapsed < 5


def test_criterion_2_regime_spot_checks():
    n = 1
    # bounded domain: the critical regimes
    cases = [
        (classify_domain(P(1, 1, 1, n), P(INF, 2, 0, n)), V.NonCompactFSS),  # d = n/p0 - n/p1 > 0, q0 < q1
        (classify_domain(P(INF, 1, 0, n), P(2, 2, 0, n)), V.NonCompactFSS),  # d = 0, p1 < p0 = inf, q0 < q1
        (classify_domain(P(INF, 1, 0, n), P(INF, 2, 0, n)), V.SSNotFSS),  # d = 0, p0 = p1 = inf, q0 < q1
        (classify_domain(P(4, 1, 0, n), P(2, 2, 0, n)), V.SSNotFSS),  # d = 0, p1 <= p0 < inf, q0 < q1
        (classify_domain(P(1, 2, 1, n), P(INF, 2, 0, n)), V.NotSS),  # d = g, q0 = q1
        # whole space
        (classify_rn(P(1, 1, 1, n), P(INF, 2, 0, n)), V.NonCompactFSS),  # d = gap > 0, q0 < q1
        (classify_rn(P(1, 4, 2, n), P(INF, HALF, 0, n)), V.NonCompactFSS),  # d > gap > 0
        (classify_rn(P(2, 1, 0, n), P(2, 2, 0, n)), V.NotSS),  # d = 0, p0 = p1, q0 <= q1
        (classify_rn(P(1, 2, 1, n), P(INF, 2, 0, n)), V.NotSS),  # d = gap > 0, q0 = q1
        # homogeneous
        (classify_homogeneous(P(2, 1, 1, n), P(2, 1, 0, n)), V.NoEmbedding),  # d != gap
        (classify_homogeneous(P(1, 1, 1, n), P(INF, 2, 0, n)), V.NonCompactFSS),  # d = gap > 0, q0 < q1
        (classify_homogeneous(P(2, 1, 0, n), P(2, 2, 0, n)), V.NotSS),  # d = gap = 0, q0 <= q1
    ]
    wrong = [(i, r.verdict, want) for i, (r, want) in enumerate(cases) if r.verdict is not want]
    report(2, not wrong, f"{len(cases) - len(wrong)}/{len(cases)} regimes")
    assert len(cases) == 12
    assert not wrong


BERNSTEIN_CASES = [(1, 1, 2, 2), (HALF, 1, 1, 2), (2, 1, 4, INF)]


def formula(n, p0, q0, p1, q1):
    a = min(1 / float(p0), 1 / float(q0))
    b = max(float(q0) / float(q1) if q1 != INF else 0.0, float(p0) / float(p1) if p1 != INF else 0.0)
    return n ** (-a * (1 - b))


def test_criterion_3_bernstein_bound():
    t0 = time.perf_counter()
    failures = []
    for p0, q0, p1, q1 in BERNSTEIN_CASES:
        src = TruncatedMixedSpace.uniform(range(2), 3, p0, q0)
        dst = TruncatedMixedSpace.uniform(range(2), 3, p1, q1)
        for n in (1, 2, 3):
            e = bruteforce_bernstein(src, dst, n, budget=200, seed=7)
            if e.oracle > formula(n, p0, q0, p1, q1) + 1e-6:
                failures.append(("bound", p0, q0, p1, q1, n, e.oracle))
            if n == 1:
                # unweighted, p0 <= p1 and q0 <= q1: the identity has norm 1
                if abs(e.oracle - 1.0) > 1e-4 or block_embedding_norm(src, dst) != 1.0:
                    failures.append(("b1", p0, q0, p1, q1, e.oracle))
    elapsed = time.perf_counter() - t0
    report(3, not failures and elapsed < 60, f"{elapsed:.1f}s")
    assert not failures, failures
    assert elapsed < 60


def test_criterion_4_rademacher_witness():
    values = {n: rademacher_witness_lower_bound(n, 4, 2) for n in range(2, 11)}
    low = {n: v for n, v in values.items() if not v >= 0.7}
    err2 = abs(values[2] - 2 ** -0.25)
    report(4, not low and err2 <= 1e-9, f"min {min(values.values()):.6f}, n=2 error {err2:.1e}")
    assert not low, low
    assert err2 <= 1e-9


HUMP_COMBOS = [(F(1), F(2), 2, eps) for eps in (0.5, 0.1)] + [
    (F(1), INF, 1, eps) for eps in (0.5, 0.1)
] + [(HALF, F(1), 1, eps) for eps in (0.5, 0.1)]


def test_criterion_5_gliding_hump():
    violations, successes, exhausted = [], 0, 0
    sizes = [min(2 ** j, 4) for j in range(80)]
    for i, ss in enumerate(np.random.SeedSequence(2024).spawn(100)):
        q0, q1, p, eps = HUMP_COMBOS[i % len(HUMP_COMBOS)]
        rng = np.random.default_rng(ss)
        src = TruncatedMixedSpace.uniform(range(80), sizes, p, q0)
        dst = src.with_exponents(q=q1)
        B = random_sparse_basis(src, int(rng.integers(30, 61)), rng, spread=2)
        try:
            r = glide(BasisOracle(B, src), eps, src, dst)
        except OracleExhausted:
            exhausted += 1
            continue
        successes += 1
        floor = (1 - r.params.delta) ** (1 / float(q0))
        if not (r.ratio < eps and r.src_norm >= floor):
            violations.append((i, float(q0), float(q1), eps, r.ratio, r.src_norm, floor))
    full = TruncatedMixedSpace.uniform(range(30), 1, 2, 1)
    r = glide(BasisOracle.full(full), 0.1, full, full.with_exponents(q=INF))
    err = abs(r.ratio - 1 / 21)
    ok = not violations and successes > 0 and err <= 1e-12
    report(5, ok, f"{successes} succeeded, {exhausted} exhausted, {len(violations)} violations, full-space error {err:.1e}")
    assert not violations, violations
    assert successes > 0
    assert err <= 1e-12


def test_criterion_6_holder_interpolation():
    rng = np.random.default_rng(6)
    worst, atom_err = -math.inf, 0.0
    for p, q, t in itertools.product((HALF, 1, 2), (HALF, 1, 2), (0.25, 0.5, 0.75)):
        for _ in range(10_000):
            sizes = rng.integers(1, 5, size=int(rng.integers(1, 5)))
            x = SeqVector([rng.standard_normal(int(m)) for m in sizes])
            lhs, rhs = holder_interpolation_gap(x, p, q, t)
            worst = max(worst, lhs - rhs)
        for c in (1.0, -3.5, 1e-3):
            atom = SeqVector([[0.0, 0.0], [0.0, c, 0.0]])
            lhs, rhs = holder_interpolation_gap(atom, p, q, t)
            atom_err = max(atom_err, abs(lhs - rhs) / abs(c))
    ok = worst <= 1e-12 and atom_err <= 1e-15
    report(6, ok, f"max lhs - rhs {worst:.2e}, atom error {atom_err:.1e}")
    assert worst <= 1e-12
    assert atom_err <= 1e-15


def test_criterion_7_haar_bridge():
    rnd = random.Random(77)
    broken = 0
    for _ in range(100):
        J = rnd.randint(1, 8)
        scale = 2 ** (J + 1)
        k = min(rnd.randint(1, 12), 3 * scale - 1)
        pts = sorted(rnd.sample(range(-scale, 2 * scale), k + 1))
        vals = [F(rnd.randint(-9, 9), rnd.randint(1, 7)) for _ in range(k)]
        f = PiecewiseConstant(tuple(F(x, scale) for x in pts), tuple(vals))
        c = haar_analyze(f, J)
        if haar_synthesize(c) != f or parseval_sum(c) != f.l2_squared():
            broken += 1
    sets = support_index_sets((QUARTER, F(3, 4)), (-QUARTER, F(5, 4)), 12)
    A = counting_constant(sets)
    ok = broken == 0 and A is not None and A <= 3
    report(7, ok, f"{100 - broken}/100 exact round trips, A = {A}")
    assert broken == 0
    assert A is not None and A <= 3


def test_criterion_8_probability_normalization():
    rs = [HALF, F(1), F(2), INF]
    off = []
    for r0, r1 in itertools.product(rs, repeat=2):
        if not r1 <= r0:
            continue
        for m in (1, 2, 4, 8, 16):
            src = TruncatedMixedSpace.probability([m], r0, 1)
            dst = TruncatedMixedSpace.probability([m], r1, 1)
            if block_embedding_norm(src, dst) != 1:
                off.append((r0, r1, m))
        src = TruncatedMixedSpace.probability([1, 2, 4, 8, 16], r0, 1)
        dst = TruncatedMixedSpace.probability([1, 2, 4, 8, 16], r1, 1)
        if block_embedding_norm(src, dst) != 1:
            off.append((r0, r1, "all"))
    report(8, not off, f"{len(off)} pairs off")
    assert not off, off
