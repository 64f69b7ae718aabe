import math

import pytest
from gmpy2 import mpq
from hypothesis import given, settings, strategies as st

from conftest import synthesized
from diophlab import exponents as ex
from diophlab import lattice as lc
from diophlab.engine import best_approximations
from diophlab.patterns import pattern_word
from diophlab.synth import (BudgetError, SynthConfig, SynthState, _w_in_u,
                            choose_center, exponent_estimate, init_triple, radius, run,
                            verify_conditions)


def small(lam, k, steps=12):
    res = synthesized(lam, k, steps)
    if isinstance(res, Exception):
        raise res
    return res


def test_init_triple_scales():
    cfg = SynthConfig(lam="0.5", k=1)
    z1, z2, z3 = init_triple(cfg, 10**6)
    assert z1[0] == 10**6
    target = 10 ** (6 * math.sqrt(2))
    assert target / 2 <= z2[0] <= 2 * target
    target3 = z2[0] ** (1 + 1 / math.sqrt(2))
    assert target3 / 2 <= z3[0] <= 2 * target3
    assert lc.is_primitive([z1, z2, z3])


def test_init_triple_low_lambda():
    z = init_triple(SynthConfig(lam="0.34", k=1), 10**6)
    assert lc.is_primitive(z)


def test_run_low_lambda_smoke():
    res = small("0.34", 1, 6)
    assert res.condition_report["exact_ok"]


def test_choose_center_toy_frame():
    eps = mpq(1, 2**20)
    zm = (1, 0, 0, 0)          # Z_j at the origin
    zprev = (1, 1, 0, 0)       # Z_{j-1} = (1, 0, 0)
    N, s, checks = choose_center(zm, zprev, (0, 1, 0), eps)
    X = [mpq(n, 2**s) for n in N]
    assert X == [eps / 4, eps / 2, 0]
    assert all(checks.values())
    # |X - Z| = sqrt(5)/4 eps < eps, and it exceeds two W radii
    d2 = sum(x * x for x in X)
    assert d2 == mpq(5, 16) * eps * eps
    assert d2 > (2 * eps / 10) ** 2


def test_w_in_u_rejects_far_centre():
    # centre on the U boundary cannot hold W
    checks = _w_in_u((10, 0, 0), 10, (0, 1, 0), 1, 1)
    assert not checks["W_in_ball"]


def test_radius_is_close():
    r = radius(10**6, "1.5")
    assert abs(float(r) * 1e9 - 1) < 1e-12
    assert r.denominator & (r.denominator - 1) == 0


def test_schedule_kinds():
    cfg = SynthConfig(lam="0.45", k=3)
    st = SynthState(cfg, cfg.chain())
    kinds = "".join(st.kind(i) for i in range(8))
    assert kinds == "AAABAAAB"
    assert st.exponent(3) == st.chain.g_k


@pytest.mark.parametrize("lam,k", [("0.4", 1), ("0.5", 1), ("0.5", 2), ("0.45", 3), ("0.6", 2)])
def test_small_runs_exact(lam, k):
    res = small(lam, k)
    rep = res.condition_report
    assert rep["exact_ok"] and rep["bands_ok"]
    assert rep["nesting"] and rep["W_in_U"] and rep["W_disjoint"]


@pytest.mark.parametrize("lam,k", [("0.5", 1), ("0.45", 3)])
def test_structure_of_steps(lam, k):
    res = small(lam, k)
    vs = res.prehistory + res.vectors
    start = len(res.prehistory)
    period = k + 1
    for j in range(start + 3, len(vs)):
        tri = vs[j - 3:j]
        if j % period == 0:
            # left the 3-space: rank 4 with the new vector, at distance >= 1/Delta
            assert lc.rank(tri + [vs[j]]) == 4
            assert lc.dot(lc.normal_vector(*tri), vs[j]) ** 2 >= 1
        else:
            diff = tuple(a - b for a, b in zip(vs[j], vs[j - 3]))
            assert lc.rank([vs[j - 2], vs[j - 1], diff]) == 2
        assert lc.is_primitive(vs[j - 2:j + 1])


def test_quadruples_unimodular():
    res = small("0.5", 1)
    vs = res.prehistory + res.vectors
    start = len(res.prehistory)
    seen = 0
    for j in range(start + 2, len(vs)):
        n = lc.normal_vector(*vs[j - 2:j + 1])
        t = next(t for t in range(j - 3, -1, -1) if lc.dot(n, vs[t]) != 0)
        assert abs(lc.det4(vs[t], *vs[j - 2:j + 1])) == 1
        seen += 1
    assert seen >= 8


@pytest.mark.parametrize("lam,k", [("0.5", 1), ("0.5", 2), ("0.45", 3)])
def test_ratios_follow_chain(lam, k):
    res = small(lam, k)
    chain = res.config.chain()
    start = len(res.prehistory)
    tail = res.realized_ratios[k + 1:]
    for off, r in enumerate(tail, k + 1):
        i = start + off
        expect = float(chain.exponent_at((i + 1) % (k + 1)))
        assert abs(r / expect - 1) < 0.1


def test_period_product_matches_glue():
    res = small("0.45", 3)
    chain = res.config.chain()
    start = len(res.prehistory)
    rs = res.realized_ratios
    target = float(chain.g_k) * math.prod(float(g) for g in chain.g_kj)
    # take a full period well past the warm-up
    first = next(t for t in range(4, len(rs)) if (start + t + 1) % 4 == 0)
    assert abs(math.prod(rs[first:first + 4]) / target - 1) < 0.1


def periodic(word, period):
    return any(all(c == period[(o + t) % len(period)] for t, c in enumerate(word))
               for o in range(len(period)))


def test_word_is_periodic():
    for lam, k in [("0.5", 1), ("0.45", 3)]:
        assert periodic(str(small(lam, k).realized_word), "A" * k + "B")


def test_alpha_enclosure_nested():
    res = small("0.5", 1)
    enc = res.alpha_enclosure
    # refining runs more steps; their W balls stay inside this one
    finer = res.alpha.enclosure(enc.den.bit_length() + 64)
    for (lo, hi), (flo, fhi) in zip(enc.bounds(), finer.bounds()):
        assert lo <= flo and fhi <= hi


def test_alpha_inside_every_u():
    res = small("0.5", 1)
    enc = res.alpha_enclosure
    cs = [mpq(c, enc.den) for c in enc.centers]
    vs = res.vectors
    chain = res.config.chain()
    start = len(res.prehistory)
    for off, v in enumerate(vs[:-1]):
        i = start + off
        rho = radius(v[0], chain.u_seq[(i + 1) % 2], 192)
        Z = [mpq(a, v[0]) for a in v[1:]]
        d2 = sum((c - z) ** 2 for c, z in zip(cs, Z))
        assert d2 < rho * rho


def test_exponent_estimates_half():
    est = exponent_estimate(small("0.5", 1, 14))
    assert est.omega_hat_est == pytest.approx(0.5, rel=0.05)
    g1 = float(ex.root_gk(1, "0.5").value)
    assert est.ratio_limsup_est == pytest.approx(g1, rel=0.1)


def test_engine_round_trip_small():
    res = small("0.45", 3)
    vs = res.vectors
    recs = best_approximations(res.alpha, vs[9][0])
    got = [tuple(r.vector()) for r in recs]
    i = got.index(tuple(vs[0]))
    assert got[i:i + 10] == [tuple(v) for v in vs[:10]]
    assert lc.rank(got[i:i + 3]) == 3


def test_determinism():
    a = run(SynthConfig(lam="0.5", k=2, steps=8, seed=3))
    b = run(SynthConfig(lam="0.5", k=2, steps=8, seed=3))
    assert a.vectors == b.vectors and a.prehistory == b.prehistory


def test_budget_guard():
    with pytest.raises(BudgetError):
        run(SynthConfig(lam="0.6", k=1, steps=30, max_bits=1 << 16))


def test_verify_flags_a_broken_vector():
    res = small("0.5", 1)
    vs = list(res.prehistory + res.vectors)
    j = len(res.prehistory) + 5
    vs[j] = (vs[j][0], vs[j][1] + 1) + tuple(vs[j][2:])
    rep = verify_conditions(vs, len(res.prehistory), res.config.chain())
    assert not rep["exact_ok"]


@settings(max_examples=6)
@given(st.sampled_from(["0.4", "0.5", "0.6"]), st.integers(1, 3))
def test_word_matches_schedule(lam, k):
    res = small(lam, k, 10)
    assert periodic(str(pattern_word(res.vectors, burn_in=0)), "A" * k + "B")
