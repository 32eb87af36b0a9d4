import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from gjms_lab.constants import (GammaParams, constants_table, ladder_constants,
                                ladder_constants_gamma_form, omega, spectral_constants,
                                trace_constants)
from gjms_lab.constants import trace_constants_alternates
from gjms_lab.errors import ConfigError

mp.mp.dps = 40

GRID = [(n, g) for n in (3, 5, 8) for g in (0.4, 0.75, 1.3, 1.5, 2.25, 2.6, 3.5) if g < n / 2]


@st.composite
def params(draw):
    n = draw(st.integers(3, 9))
    g = draw(st.floats(0.05, n / 2 - 0.05))
    assume(abs(g - round(g)) > 0.02)
    return GammaParams(n, g)


def mp_b_even(p, j):
    g, fl, fr = mp.mpf(p.gamma), p.floor_g, mp.mpf(p.frac_g)
    return (4 ** (2 * j) * mp.factorial(j) * mp.rgamma(1 - fr) * mp.gamma(j + 1 - fr)
            * mp.gamma(g + 1 - j) * mp.gamma(fl + 1 - j)
            * mp.rgamma(g + 1 - 2 * j) * mp.rgamma(fl + 1 - 2 * j))


def mp_pi(p, j):
    g, fl = mp.mpf(p.gamma), p.floor_g
    return (4 ** fl * mp.gamma(g - j + 1) * mp.gamma(j + 1) * mp.gamma(j + fl - g + 1)
            * mp.gamma(fl - j + 1) * mp.rgamma(g - 2 * j + 1) * mp.rgamma(2 * j - g + 1))


def rel(a, b):
    s = max(abs(a), abs(b))
    return 0.0 if s == 0 else abs(a - b) / s


@pytest.mark.parametrize("n,g", [(3, 1.5), (3, 0.0), (3, 2.0), (2, 0.5), (4, 1.0)])
def test_parameter_validation(n, g):
    with pytest.raises(ConfigError):
        GammaParams(n, g)


@given(params())
def test_parameter_invariants(p):
    assert 0 < p.frac_g < 1
    assert p.k == p.floor_g + 1
    assert p.gamma < p.n / 2
    with pytest.raises(ConfigError):
        p.check_j(p.floor_g + 1)


def test_documented_values():
    b, bs, pi, c, d = ladder_constants(GammaParams(4, 1.5), 1)
    assert b == 0.0
    _, _, pi0, c0, _ = ladder_constants(GammaParams(3, 0.5), 0)
    assert pi0 == 1.0
    # 2^{-1/2} Gamma(-1/2)/Gamma(1/2) = -sqrt 2 by reflection
    assert c0 == pytest.approx(-math.sqrt(2), rel=1e-14)
    sigma, varsigma = trace_constants(GammaParams(3, 0.5), 0)
    assert sigma == pytest.approx(1.0, rel=1e-14)
    assert varsigma == pytest.approx(math.sqrt(2), rel=1e-14)


def test_spectral_values():
    c, beck, om = spectral_constants(GammaParams(3, 0.5))
    assert om == pytest.approx(2 * math.pi ** 2, rel=1e-15)
    assert c == pytest.approx(-1 / math.sqrt(2), rel=1e-14)
    assert spectral_constants(GammaParams(4, 0.5))[1] == pytest.approx(1.5, rel=1e-14)


@pytest.mark.parametrize("n", range(1, 9))
def test_sphere_area(n):
    assert omega(n) == pytest.approx(float(2 * mp.pi ** ((n + 1) / 2) / mp.gamma((n + 1) / 2)))


@pytest.mark.parametrize("n,g", GRID)
def test_products_match_high_precision_gamma_forms(n, g):
    p = GammaParams(n, g)
    for j in range(p.floor_g + 1):
        b, bs, pi, _, _ = ladder_constants(p, j)
        bg, bsg, pig, _, _ = ladder_constants_gamma_form(p, j)
        assert rel(pi, float(mp_pi(p, j))) <= 1e-12
        assert rel(pi, pig) <= 1e-12
        assert rel(b, bg) <= 1e-12 or abs(b) + abs(bg) < 1e-12
        if b != 0:
            assert rel(b, float(mp_b_even(p, j))) <= 1e-12
        assert rel(bs, bsg) <= 1e-12 or abs(bs) + abs(bsg) < 1e-12


@given(params())
def test_vanishing_ranges(p):
    fl = p.floor_g
    for j in range(fl + 1):
        b, bs, *_ = ladder_constants(p, j)
        if 0.5 * (1 + fl) <= j:
            assert b == 0.0
        else:
            assert b != 0.0
        if 0.5 * fl <= j:
            assert bs == 0.0


@given(params())
def test_trace_constants_finite_and_positive(p):
    for j in range(p.floor_g + 1):
        sigma, varsigma = trace_constants(p, j)
        alt = trace_constants_alternates(p, j)
        assert np.isfinite(sigma) and np.isfinite(varsigma)
        assert varsigma > 0 and alt["varsigma_pi"] > 0


@given(params())
def test_printed_forms_are_pi_forms_over_four_to_floor(p):
    scale = 4.0 ** p.floor_g
    for j in range(p.floor_g + 1):
        sigma, varsigma = trace_constants(p, j)
        alt = trace_constants_alternates(p, j)
        assert sigma * scale == pytest.approx(alt["sigma_pi"], rel=1e-11)
        assert varsigma * scale == pytest.approx(alt["varsigma_pi"], rel=1e-11)
        assert alt["sigma_2n"] == pytest.approx(alt["sigma_pi"] * 2.0 ** -p.n, rel=1e-15)


def test_table_shape():
    t = constants_table(GammaParams(5, 2.3))
    assert [r.j for r in t["rows"]] == [0, 1, 2]
    assert t["k"] == 3 and t["floor_g"] == 2
    for r in t["rows"]:
        res = r.residuals()
        assert res["b_2j"] <= 1e-12 and res["pi_j"] <= 1e-12
