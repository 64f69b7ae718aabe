import math

import pytest
from hypothesis import given, strategies as st
from mpmath import mpf, nstr, sqrt

from diophlab import exponents as ex

lams = st.integers(34, 99).map(lambda i: i / 100)
ks = st.integers(1, 12)


def oracle_gk(k, lam):
    """Quadratic formula in floats, picking the root inside the bracket."""
    th = (1 - lam) / lam
    S = lambda n: n if th == 1 else (th**n - 1) / (th - 1)
    M = th * S(k + 1)
    N = 2 * th**k + S(k) / lam + th * S(k - 1)
    P = S(k - 1) / lam + th ** (k - 1)
    d = math.sqrt(N * N - 4 * M * P)
    lo, hi = max(1, 1 / th), 2 / th
    roots = [r for r in ((N - d) / (2 * M), (N + d) / (2 * M)) if lo < r < hi]
    assert len(roots) == 1
    return roots[0]


def test_half_k1_closed_form():
    assert abs(ex.root_gk(1, "0.5").value - (1 + 1 / sqrt(2))) < 1e-12
    c = ex.exponent_chain(1, "0.5")
    assert abs(c.g_kj[0] - sqrt(2)) < 1e-12


def test_poly_coeffs_half():
    assert [float(x) for x in ex.poly_coeffs(1, "0.5")] == [2.0, 4.0, 1.0]
    assert [float(x) for x in ex.poly_coeffs(2, "0.5")] == [3.0, 7.0, 3.0]


def test_chain_frozen():
    c = ex.exponent_chain(3, "0.45")
    assert float(c.g_k) == pytest.approx(1.54439, abs=1e-5)
    assert [float(x) for x in c.g_kj] == pytest.approx([1.12665, 1.18315, 1.28840], abs=1e-5)
    assert c.period_exponents()[0] == c.g_k
    assert len(c.u_seq) == 4


def test_roy_constant():
    lam = ex.roy_lambda()
    assert nstr(lam, 5) == "0.42451"   # 0.4245069..., rounded
    g = ex.root_gk(1, lam, tol=1e-30).value
    assert abs(g - ex.theta_of(lam)) < 1e-9
    assert abs(ex.R(1, ex.theta_of(lam), lam)) < 1e-9


def test_domain_guard():
    with pytest.raises(ex.DomainError):
        ex.root_gk(1, "0.2")
    with pytest.raises(ex.DomainError):
        ex.params("1.0")


def test_series_S():
    assert ex.series_S(0, 2) == 0
    assert ex.series_S(3, 2) == 7
    assert ex.series_S(4, 1) == 4


def test_sigma_examples():
    assert ex.sigma("1.2", "0.5") == pytest.approx(4)
    with pytest.raises(ex.DomainError):
        ex.sigma(3, "0.5")


def test_f_chain_examples():
    # lambda = 3/4: 1/(1-lambda) = 4 and 1/theta = 3, both exact
    assert ex.f_chain(1, 4, "0.75")[0] == 3
    with pytest.raises(ex.WindowError):
        ex.f_chain(2, "1.6", "0.5")


def test_gbar_cases():
    assert ex.gbar("0.6") == pytest.approx(2.5)
    assert ex.gbar("0.4") == pytest.approx(4 / 3)


def test_G_values():
    assert ex.G_of(2, "0.6") == pytest.approx(1.5)
    assert ex.G_of(3, 1) == ex.INF
    with pytest.raises(ex.DomainError):
        ex.G_of(3, "0.2")


@given(lams, ks)
def test_root_matches_quadratic_oracle(lam, k):
    g = ex.root_gk(k, lam).value
    assert abs(float(g) - oracle_gk(k, lam)) < 1e-9
    res = ex.root_gk(k, lam)
    assert res.bracket[0] <= g <= res.bracket[1]


@given(lams, st.integers(1, 11))
def test_monotone_in_k(lam, k):
    # near lambda = 1 consecutive roots differ by about theta^k
    tol = mpf(2) ** -140
    assert ex.root_gk(k + 1, lam, tol=tol).value > ex.root_gk(k, lam, tol=tol).value


@given(lams, ks)
def test_bracket_bounds(lam, k):
    th = ex.theta_of(lam)
    g = ex.root_gk(k, lam).value
    assert max(1, 1 / th) < g < 2 / th
    assert g > ex.G3_closed(lam)


@given(lams, ks)
def test_fixed_point_and_glue(lam, k):
    c = ex.exponent_chain(k, lam)
    th = ex.theta_of(lam)
    assert abs(ex.f_chain(k, c.g_k, lam)[-1] - c.g_k) < 1e-9
    assert abs((c.g_kj[0] + 1) / (th * c.g_kj[0]) - c.g_k) < 1e-9
    for j in range(1, k):
        back = (c.g_kj[j] - c.lam) / ((1 - c.lam) * c.g_kj[j])
        assert abs(back - c.g_kj[j - 1]) < 1e-9


@given(lams, ks)
def test_sigma_window_inequality(lam, k):
    # theta^k > sigma S_k at the root
    g = ex.exponent_chain(k, lam).g_k
    th = ex.theta_of(lam)
    if g < 1 / (1 - mpf(lam)):
        assert th**k > ex.sigma(g, lam) * ex.series_S(k, th)


@given(st.floats(0.34, 0.98))
def test_G3_closed_matches_root(w):
    assert abs(ex.G3_closed(w) - ex.G_of(3, w)) < 1e-20


@given(lams, ks)
def test_u_sequence(lam, k):
    c = ex.exponent_chain(k, lam)
    assert abs(c.u_seq[0] - (1 + c.lam * c.g_k)) < 1e-12
    for p in range(1, k + 1):
        assert c.exponent_at(p) == c.g_kj[k - p]
        assert abs(c.u_seq[p] - (1 + c.lam * c.g_kj[k - p])) < 1e-12
