import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from mpmath import sqrt

from diophlab.engine import (PrecisionError, Target, TieError, best_approximations,
                             exponent_stats, records_for_vectors)


def brute_force(alpha, q_max, ties="strict"):
    """Exact scan over every q with Fractions; returns [(q, a, xi2)] or 'tie'."""
    out = []
    for q in range(1, q_max + 1):
        a, tied = [], False
        for x in alpha:
            y = q * x
            fl = y.numerator // y.denominator
            frac = y - fl
            tied |= frac == Fraction(1, 2)
            a.append(fl + (1 if frac >= Fraction(1, 2) else 0))
        xi2 = sum((q * x - ai) ** 2 for x, ai in zip(alpha, a))
        if out and xi2 == out[-1][2] and ties == "error":
            return "tie"
        if not out or xi2 < out[-1][2]:
            if tied:
                return "tie"
            out.append((q, tuple(a), xi2))
            if xi2 == 0:
                break
    return out


def engine_rows(alpha, q_max, ties="strict"):
    try:
        recs = best_approximations(Target.rational(alpha), q_max, ties=ties)
    except TieError:
        return "tie"
    for r in recs:
        assert r.xi_sq[0] == r.xi_sq[1]
    return [(int(r.q), tuple(int(x) for x in r.a), Fraction(r.xi_sq[0])) for r in recs]


def golden():
    return Target.from_mpmath([lambda: (sqrt(5) - 1) / 2], label="golden")


def fib_upto(n):
    f = [1, 2]
    while f[-1] + f[-2] <= n:
        f.append(f[-1] + f[-2])
    return f


def test_golden_fibonacci_100():
    assert [int(r.q) for r in best_approximations(golden(), 100)] == [1, 2, 3, 5, 8, 13, 21, 34, 55, 89]


def test_golden_determinants():
    recs = best_approximations(golden(), 10**5)
    assert [int(r.q) for r in recs] == fib_upto(10**5)
    for r, s in zip(recs, recs[1:]):
        assert abs(r.q * s.a[0] - s.q * r.a[0]) == 1


def test_golden_exponents_near_one():
    # xi ~ 1/(sqrt(5) q), so the window must start well past q = 10^6 for 5%
    est = exponent_stats(best_approximations(golden(), 10**20))
    assert est.omega_est == pytest.approx(1, rel=0.05)
    assert est.omega_hat_est == pytest.approx(1, rel=0.05)
    assert est.ratio_limsup_est >= 1


def test_rational_terminates():
    # q = 1 and q = 2 tie exactly here, hence strict mode
    recs = best_approximations(Target.rational(["1/7", "3/7", "5/7"]), 100, ties="strict")
    assert recs[-1].q == 7 and recs[-1].xi_sq == (0, 0)


def test_same_q_tie():
    with pytest.raises(TieError) as info:
        best_approximations(Target.rational(["1/2"]), 10)
    assert info.value.kind == "same-q" and info.value.q == 1


def test_equal_minimum_tie():
    alpha = [Fraction(1, 3), Fraction(2, 7), Fraction(5, 11)]
    with pytest.raises(TieError) as info:
        best_approximations(Target.rational(alpha), 300)
    assert info.value.kind == "equal-minimum"
    assert brute_force(alpha, 300, ties="error") == "tie"
    assert engine_rows(alpha, 300) == brute_force(alpha, 300)


def test_precision_exhausted():
    t = Target.from_decimal(["0.4142135623"])
    with pytest.raises(PrecisionError):
        best_approximations(t, 10**8)


def test_lattice_method_agrees_with_scan():
    t = Target.from_mpmath([lambda: sqrt(2), lambda: sqrt(3), lambda: sqrt(5)])
    a = [r.vector() for r in best_approximations(t, 200000, method="scan")]
    b = [r.vector() for r in best_approximations(t, 200000, method="lattice")]
    assert a == b


def test_records_for_vectors_match_engine():
    t = Target.from_mpmath([lambda: sqrt(2), lambda: sqrt(3)])
    recs = best_approximations(t, 10**6)
    again = records_for_vectors(t, [r.vector() for r in recs], 256)
    assert [r.vector() for r in again] == [r.vector() for r in recs]
    for r in again:
        assert r.xi_sq[0] <= r.xi_sq[1]


def test_exponent_stats_needs_records():
    with pytest.raises(ValueError):
        exponent_stats(best_approximations(golden(), 10))


def test_random_rationals_against_brute_force():
    rng = random.Random(7)
    for _ in range(10):
        n = rng.randint(1, 3)
        D = rng.randint(2, 500)
        alpha = [Fraction(rng.randint(0, D - 1), D) for _ in range(n)]
        assert engine_rows(alpha, 2000) == brute_force(alpha, 2000)


dens = st.integers(2, 300)


@st.composite
def rationals(draw):
    D = draw(dens)
    n = draw(st.integers(1, 3))
    return [Fraction(draw(st.integers(-2 * D, 2 * D)), D) for _ in range(n)]


@given(rationals())
def test_oracle_equivalence(alpha):
    assert engine_rows(alpha, 600) == brute_force(alpha, 600)


@given(rationals(), st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_integer_translation(alpha, shift):
    moved = [x + s for x, s in zip(alpha, shift)]
    a, b = engine_rows(alpha, 400), engine_rows(moved, 400)
    if a == "tie":
        assert b == "tie"
        return
    assert [(q, xi) for q, _, xi in a] == [(q, xi) for q, _, xi in b]
    for (q, va, _), (_, vb, _) in zip(a, b):
        assert all(y == x + q * s for x, y, s in zip(va, vb, shift))


@given(rationals())
def test_monotone_records(alpha):
    rows = engine_rows(alpha, 600)
    if rows == "tie":
        return
    for (q1, _, x1), (q2, _, x2) in zip(rows, rows[1:]):
        assert q1 < q2 and x1 > x2
