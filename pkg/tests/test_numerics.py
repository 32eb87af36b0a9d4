import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from gjms_lab.errors import IndeterminateLimitError, NonintegrableError, PoleError
from gjms_lab.numerics import (EpsJet, TruncatedSeries, eps_limit_quotient, gamma_ratio,
                               gauss_jacobi, quadrature, rgamma_product, series_ops,
                               signed_lgamma)

# Gamma values away from the poles; the reflection formula gives an oracle
# for negative arguments that does not go through gammaln.
nonpole = st.floats(-8.5, 12.0).filter(lambda x: abs(x - round(x)) > 1e-3 or x > 0.5)


def reflection_gamma(x):
    if x > 0:
        return math.gamma(x)
    return math.pi / (math.sin(math.pi * x) * math.gamma(1 - x))


@given(nonpole)
def test_signed_lgamma_reproduces_gamma(x):
    s = signed_lgamma(x)
    ref = reflection_gamma(x)
    assert s.sign == np.sign(ref)
    assert math.isclose(s.value, ref, rel_tol=1e-12)


def test_sign_flips_on_negative_intervals():
    signs = [signed_lgamma(-m - 0.5).sign for m in range(6)]
    assert signs == [-1, 1, -1, 1, -1, 1]


@pytest.mark.parametrize("x", [0.0, -1.0, -2.0, -7.0])
def test_poles_raise(x):
    with pytest.raises(PoleError):
        signed_lgamma(x)


def test_gamma_ratio_examples():
    assert gamma_ratio(5, 3) == pytest.approx(12.0, rel=1e-14)
    # Gamma(-1/2) = -2 sqrt(pi), Gamma(1/2) = sqrt(pi)
    assert gamma_ratio(-0.5, 0.5) == pytest.approx(-2.0, rel=1e-14)


@given(nonpole)
def test_gamma_ratio_of_equal_arguments_is_one(x):
    assert gamma_ratio(x, x) == pytest.approx(1.0, rel=1e-14)


@given(st.floats(0.1, 6.0), st.floats(0.1, 6.0), st.floats(0.1, 6.0))
def test_rgamma_product_matches_scipy(a, b, c):
    ref = special.gamma(a) * special.gamma(b) / special.gamma(c)
    assert rgamma_product([a, b], [c]) == pytest.approx(ref, rel=1e-12)


# truncated series


def test_product_of_binomials():
    p = TruncatedSeries([1, 1, 0, 0]) * TruncatedSeries([1, -1, 0, 0])
    np.testing.assert_array_equal(p.coeffs, [1, 0, -1, 0])


def test_differentiate_monomial():
    d = TruncatedSeries.monomial(0.3, 4).differentiate()
    assert d.offset == pytest.approx(-0.7)
    assert d.coeffs[0] == pytest.approx(0.3)
    assert not np.any(d.coeffs[1:])


def test_addition_keeps_common_order():
    s = TruncatedSeries([1, 2, 3], 0.5) + TruncatedSeries([1, 2], 0.5)
    assert s.order == 1
    np.testing.assert_array_equal(s.coeffs, [2, 4])


def test_compose_needs_vanishing_inner():
    with pytest.raises(ValueError):
        TruncatedSeries([1, 1, 0]).compose(TruncatedSeries([1, 1, 0]))


coeffs = st.lists(st.floats(-1, 1), min_size=6, max_size=6)


@given(coeffs, coeffs)
def test_multiplication_truncates_like_numpy(a, b):
    ref = np.convolve(a, b)[:6]
    np.testing.assert_allclose((TruncatedSeries(a) * TruncatedSeries(b)).coeffs, ref,
                               atol=1e-14)


@given(coeffs)
def test_reciprocal_roundtrip(a):
    a = [1.0 + abs(a[0])] + a[1:]
    s = TruncatedSeries(a)
    one = s * s.reciprocal()
    np.testing.assert_allclose(one.coeffs, [1, 0, 0, 0, 0, 0], atol=1e-10)


@given(coeffs)
def test_revert_is_compositional_inverse(a):
    inner = TruncatedSeries([1.0 + abs(a[0])] + a[1:], 1.0)
    ident = TruncatedSeries(np.r_[0.0, inner.coeffs]).compose(inner.revert())
    np.testing.assert_allclose(ident.coeffs, [0, 1, 0, 0, 0, 0, 0], atol=1e-9)


@given(coeffs, st.floats(0.05, 0.4))
def test_evaluate_matches_polynomial(a, x):
    s = TruncatedSeries(a, 0.5)
    ref = np.polyval(a[::-1], x) * x ** 0.5
    assert s.evaluate(x) == pytest.approx(ref, abs=1e-13)


def test_exp_log_inverse():
    s = TruncatedSeries([0.0, 0.3, -0.2, 0.1, 0.0, 0.0])
    back = s.exp().log()
    np.testing.assert_allclose(back.coeffs, s.coeffs, atol=1e-14)


def test_series_ops_dispatch():
    a = TruncatedSeries([1.0, 2.0, 0.0])
    b = TruncatedSeries([0.0, 1.0, 0.0])
    np.testing.assert_array_equal(series_ops(a, b, "add").coeffs, [1, 3, 0])
    np.testing.assert_array_equal(series_ops(a, b, "mul").coeffs, [0, 1, 2])
    assert series_ops(a, kind="differentiate").evaluate(0.3) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        series_ops(a, b, "divide")


# epsilon jets


def test_jet_product_rule():
    p = EpsJet(2.0, 3.0) * EpsJet(5.0, 7.0)
    assert (p.val, p.dval) == (10.0, 29.0)


def test_limit_quotients():
    assert eps_limit_quotient(EpsJet(2, 3), EpsJet(1, 5)) == 2.0
    assert eps_limit_quotient(EpsJet(0, 6), EpsJet(0, 2)) == 3.0
    with pytest.raises(IndeterminateLimitError):
        eps_limit_quotient(EpsJet(1, 0), EpsJet(0, 2))


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.5, 5), st.floats(-5, 5))
def test_limit_agrees_with_small_eps(a, b, c, d):
    q = eps_limit_quotient(EpsJet(0.0, b), EpsJet(0.0, c))
    eps = 1e-8
    assert q == pytest.approx((eps * b) / (eps * c), rel=1e-12)
    r = eps_limit_quotient(EpsJet(a, b), EpsJet(c, d))
    assert r == pytest.approx(a / c, rel=1e-14, abs=1e-300)


# quadrature


def test_quadrature_examples():
    assert quadrature(lambda x: x ** 2, (0, 1))[0] == pytest.approx(1 / 3, abs=1e-12)
    one = np.ones_like
    assert quadrature(one, (0, 1), (0.0, -0.5))[0] == pytest.approx(2.0, abs=1e-10)
    beta = gamma_ratio(1.3, 2.9) * math.gamma(1.6)
    assert quadrature(one, (0, 1), (0.3, 0.6))[0] == pytest.approx(beta, abs=1e-10)


def test_nonintegrable_endpoint():
    with pytest.raises(NonintegrableError):
        quadrature(np.ones_like, (0, 1), (-1.0, 0.0))


@settings(max_examples=30)
@given(st.floats(-0.9, 2.0), st.floats(-0.9, 2.0), st.integers(0, 6))
def test_gauss_jacobi_integrates_monomials(alpha, beta, m):
    x, w = gauss_jacobi(24, 0.0, 1.0, alpha, beta)
    ref = special.beta(alpha + m + 1, beta + 1)
    assert np.dot(w, x ** m) == pytest.approx(ref, rel=1e-11)
