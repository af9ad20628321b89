import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from sar2d import CapacityError, DomainError
from sar2d.coeffs import (BinConvLaw, GMethod, LocalCltFrame, binom_conv_pmf, binom_pmf,
                          g_table, g_value, hyp2f1_terminating, local_clt_approx,
                          rate_function, tail_bound)
from sar2d.params import Params

from oracles import binom_conv_brute, g_python

FACE = Params(0.3, 0.5, 0.2)


def test_g_table_examples():
    assert g_table(Params(0.7, -0.2, 3.0), 0, 0).values[0, 0] == 1.0
    assert np.all(g_table(Params(1, 1, -1), 10, 10).values == 1.0)
    v = g_table(FACE, 3, 3).values
    assert v[1, 1] == pytest.approx(0.5, abs=1e-15)
    assert v[2, 1] == pytest.approx(0.255, abs=1e-15)


def test_g_table_is_readonly():
    t = g_table(FACE, 3, 3)
    with pytest.raises(ValueError):
        t.values[0, 0] = 2.0


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
       st.integers(0, 12), st.integers(0, 12))
def test_g_table_recursion_bitwise(a, b, c, M, N):
    p = Params(a, b, c)
    assert np.array_equal(g_table(p, M, N).values, g_python((a, b, c), M, N))


@given(st.floats(0, 0.999), st.floats(0, 0.999))
def test_g_table_probabilities_on_face(a, b):
    if abs(1 - a - b) >= 1:
        return
    v = g_table(Params(a, b, 1 - a - b), 25, 25).values
    assert v.min() >= -1e-12 and v.max() <= 1 + 1e-12


def test_g_table_capacity():
    with pytest.raises(CapacityError):
        g_table(FACE, 10_000, 10_000)
    with pytest.raises(CapacityError):
        g_table(FACE, 10, 10, max_entries=100)
    with pytest.raises(DomainError):
        g_table(FACE, -1, 3)


def test_g_value_examples():
    assert g_value(1, 1, FACE, "ClosedForm") == pytest.approx(0.5, abs=1e-15)
    assert g_value(2, 1, FACE, GMethod.BINOMIAL) == pytest.approx(0.255, abs=1e-15)
    for m, n in [(0, 0), (3, 2), (5, 5)]:
        assert g_value(m, n, Params(1, 1, -1), "ClosedForm") == 1.0
    with pytest.raises(DomainError):
        g_value(1, 1, Params(0, 0.5, 0.5), "Hypergeometric")


def test_g_value_domain_errors():
    with pytest.raises(DomainError):
        g_value(1, 1, Params(0.3, 0.5, 0.1), "Binomial")
    with pytest.raises(DomainError):
        g_value(1, 1, Params(1, 0.5, -0.5), "Binomial")
    with pytest.raises(DomainError):
        g_value(31, 30, FACE, "ClosedForm")
    with pytest.raises(DomainError):
        g_value(-1, 0, FACE, "ClosedForm")
    with pytest.raises(ValueError):
        g_value(1, 1, FACE, "Nope")


def test_closed_form_handles_zero_coefficients():
    p = Params(0.0, 0.5, 0.5)
    G = g_table(p, 8, 8).values
    for m in range(9):
        for n in range(9):
            assert g_value(m, n, p, "ClosedForm") == pytest.approx(G[m, n], rel=1e-12, abs=1e-15)


@settings(max_examples=25)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(0.05, 0.95),
       st.integers(0, 3))
def test_route_equivalence(a, b, c, signs):
    # one sign pattern per flip; all have a*b*c > 0 so no series cancels
    sa, sb = [(1, 1), (-1, -1), (-1, 1), (1, -1)][signs]
    sc = sa * sb
    s = a + b + c
    if s >= 1:
        a, b, c = a / (s + 0.01), b / (s + 0.01), c / (s + 0.01)
    p = Params(sa * a, sb * b, sc * c)
    G = g_table(p, 20, 20).values
    for m in range(21):
        for n in range(21):
            cf = g_value(m, n, p, "ClosedForm")
            hg = g_value(m, n, p, "Hypergeometric")
            assert cf == pytest.approx(G[m, n], rel=1e-9, abs=0)
            assert hg == pytest.approx(G[m, n], rel=1e-9, abs=0)


def test_mixed_sign_routes_agree_on_term_scale():
    # with a*b*c < 0 the series alternates; compare on the scale of |terms|
    p = Params(0.6, 0.5, -0.3)
    absp = Params(0.6, 0.5, 0.3)
    G = g_table(p, 20, 20).values
    scale = g_table(absp, 20, 20).values
    for m in range(21):
        for n in range(21):
            for meth in ("ClosedForm", "Hypergeometric"):
                assert abs(g_value(m, n, p, meth) - G[m, n]) <= 1e-12 * scale[m, n]


def test_binomial_route_with_negative_gamma():
    p = Params(0.7, 0.6, -0.3)
    G = g_table(p, 20, 20).values
    scale = g_table(Params(0.7, 0.6, 0.3), 20, 20).values
    for m in range(21):
        for n in range(21):
            assert abs(g_value(m, n, p, "Binomial") - G[m, n]) <= 1e-12 * scale[m, n]


def test_hyp2f1_terminating():
    assert hyp2f1_terminating(4, -3, -7, 1.0).value == pytest.approx(1 / math.comb(7, 4))
    assert hyp2f1_terminating(4, -3, -7, 0.0) == (1.0, True)
    res = hyp2f1_terminating(5, 1.0, -2.0, 0.5)
    assert not res.reliable
    # terms r = 0, 1, 2 only
    t1 = (-5) * 1.0 / (-2.0) * 0.5
    t2 = t1 * (-4) * 2.0 / ((-1.0) * 2) * 0.5
    assert res.value == pytest.approx(1 + t1 + t2)


def test_binom_conv_examples():
    assert np.allclose(binom_conv_pmf(1, 0.3, 1, 0.5).pmf, [0.35, 0.5, 0.15], atol=1e-15)
    z = binom_conv_pmf(4, 0.0, 3, 0.0).pmf
    assert z[0] == 1 and np.all(z[1:] == 0)
    assert np.array_equal(binom_conv_pmf(0, 0.4, 0, 0.9).pmf, [1.0])
    with pytest.raises(DomainError):
        binom_conv_pmf(3, 1.2, 2, 0.5)
    with pytest.raises(DomainError):
        binom_conv_pmf(3, 0.2, 2, -0.1)


@given(st.integers(0, 25), st.floats(0, 1), st.integers(0, 25), st.floats(0, 1))
def test_binom_conv_matches_brute_force(k, nu, l, mu):
    law = binom_conv_pmf(k, nu, l, mu)
    assert isinstance(law, BinConvLaw)
    assert law.pmf.size == k + l + 1
    assert np.all(law.pmf >= 0)
    assert abs(law.pmf.sum() - 1) <= 1e-12
    assert np.allclose(law.pmf, binom_conv_brute(k, nu, l, mu), rtol=1e-10, atol=1e-15)


@pytest.mark.parametrize("k, nu", [(600, 0.3), (800, 0.9), (450, 0.95), (50, 0.5)])
def test_binom_pmf_large_and_log_space(k, nu):
    p = binom_pmf(k, nu)
    assert abs(p.sum() - 1) <= 1e-12
    assert np.allclose(p, binom.pmf(np.arange(k + 1), k, nu), rtol=1e-9, atol=1e-300)


def test_local_clt_examples():
    f = LocalCltFrame(50, 0.3, 50, 0.5)
    assert f.m_kl == pytest.approx(40.0)
    assert f.b_kl == pytest.approx(23.0)
    assert local_clt_approx(f, 40) == pytest.approx((2 * math.pi * 23.0) ** -0.5)
    # the quoted 0.08316 is rounded; the plug-in value is 0.083185
    assert local_clt_approx(f, 40) == pytest.approx(0.08316, abs=5e-5)
    with pytest.raises(DomainError):
        local_clt_approx(LocalCltFrame(0, 0.3, 0, 0.5), 0)
    with pytest.raises(DomainError):
        local_clt_approx(LocalCltFrame(5, 0.0, 5, 1.0), 0)


def test_local_clt_error_is_order_one_over_b():
    def scaled_err(k, l):
        law = binom_conv_pmf(k, 0.3, l, 0.5)
        j = np.arange(law.pmf.size)
        return law.frame.b_kl * np.max(np.abs(law.pmf - local_clt_approx(law.frame, j)))

    # the constant depends on the k:l mix, so calibrate over all sizes up to 10
    C = max(scaled_err(k, l) for k in range(11) for l in range(11) if k + l > 0)
    for k in (10, 20, 40, 80, 200):
        for l in (0, 10, 25, 60, 200):
            assert scaled_err(k, l) <= C


def test_first_difference_rate_does_not_explode():
    def scaled(k, l):
        law = binom_conv_pmf(k, 0.3, l, 0.5)
        return law.frame.b_kl * np.max(np.abs(np.diff(law.pmf)))

    small = max(scaled(k, l) for k in range(10, 21) for l in range(10, 21))
    big = max(scaled(k, l) for k in range(10, 51) for l in range(10, 51))
    assert big <= 1.5 * small


def test_rate_function_examples():
    for t in (0.1, 0.4, 0.9):
        assert rate_function(t, t) == 0.0
    assert rate_function(0.5, 1.0) == pytest.approx(math.log(2), abs=1e-12)
    assert rate_function(0.5, 1.1) == math.inf
    assert rate_function(0.5, -0.1) == math.inf
    assert rate_function(0.3, 0.0) == pytest.approx(-math.log(0.7))
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(DomainError):
            rate_function(bad, 0.5)


def test_tail_bound_examples():
    b = tail_bound(1, 1, 0.3, 0.5, 0.9, "Upper")
    assert b == pytest.approx(math.exp(-2 * rate_function(0.4, 0.9)))
    # hand value 0.9 ln(9/4) + 0.1 ln(1/6) = 0.550658 gives 0.332431
    assert b == pytest.approx(0.332431, abs=1e-6)
    assert binom_conv_pmf(1, 0.3, 1, 0.5).tail(1.8, "Upper") == pytest.approx(0.15)
    assert 0.15 <= b
    assert tail_bound(5, 7, 0.3, 0.5, (0.3 * 5 + 0.5 * 7) / 12 + 1e-9) == pytest.approx(1.0)


def test_tail_bound_domain_errors():
    with pytest.raises(DomainError):
        tail_bound(1, 1, 0.3, 0.5, 0.2, "Upper")
    with pytest.raises(DomainError):
        tail_bound(1, 1, 0.3, 0.5, 0.9, "Lower")
    with pytest.raises(DomainError):
        tail_bound(0, 0, 0.3, 0.5, 0.9)
    with pytest.raises(DomainError):
        tail_bound(2, 2, 0.0, 0.0, 0.5)
    with pytest.raises(DomainError):
        tail_bound(2, 2, 0.3, 0.5, 0.9, "Middle")


@given(st.integers(0, 40), st.integers(0, 40), st.floats(0.01, 0.99), st.floats(0.01, 0.99),
       st.floats(0.001, 0.999))
def test_hoeffding_domination(k, l, nu, mu, frac):
    if k + l == 0:
        return
    law = binom_conv_pmf(k, nu, l, mu)
    theta = (nu * k + mu * l) / (k + l)
    x_up = theta + (1 - theta) * frac
    x_lo = theta * (1 - frac)
    if x_up > theta:
        assert law.tail((k + l) * x_up, "Upper") <= tail_bound(k, l, nu, mu, x_up, "Upper")
    if x_lo < theta:
        assert law.tail((k + l) * x_lo, "Lower") <= tail_bound(k, l, nu, mu, x_lo, "Lower")
