import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from gjms_lab.boundary import ModelGeometry
from gjms_lab.constants import GammaParams, omega, trace_constants
from gjms_lab.errors import ConfigError
from gjms_lab.extension import gjms_multiplier
from gjms_lab.sobolev import (ZonalFunction, ball_trace_rhs, beckner_constant, beckner_lhs,
                              beckner_ratio, extremal_zonal, zonal_extension_energy)


@pytest.mark.parametrize("n", [3, 4, 6])
def test_zonal_basis_is_orthonormal(n):
    z = ZonalFunction(n, np.zeros(5))
    G = np.empty((5, 5))
    for i in range(5):
        for j in range(5):
            f = lambda th: (z.basis(np.cos(th))[i] * z.basis(np.cos(th))[j]
                            * math.sin(th) ** (n - 1))
            G[i, j] = omega(n - 1) * quad(f, 0, math.pi, epsabs=1e-14)[0]
    np.testing.assert_allclose(G, np.eye(5), atol=1e-12)


def test_projection_reconstructs_values():
    f = lambda x: np.exp(0.7 * x) * (1 + x * x)
    z = ZonalFunction.project(4, f, 30)
    x = np.linspace(-1, 1, 41)
    np.testing.assert_allclose(z(x), f(x), atol=1e-8)


@pytest.mark.parametrize("n,g", [(3, 0.75), (4, 1.4), (5, 2.3)])
def test_constants_are_extremal(n, g):
    assert beckner_ratio(ZonalFunction(n, np.array([2.5])), g) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("t", [0.0, 0.3, 0.6])
@pytest.mark.parametrize("n,g", [(3, 0.75), (5, 2.3)])
def test_extremals_attain_the_bound(n, g, t):
    assert beckner_ratio(extremal_zonal(n, g, t), g) == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_random_zonal_functions_satisfy_the_bound(seed):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(6) / (1 + np.arange(6))
    assert beckner_ratio(ZonalFunction(3, c), 0.75) >= 1 - 1e-8


def test_extremal_coefficients():
    z0 = extremal_zonal(3, 0.75, 0.0)
    assert z0.L == 0 and z0.coeffs[0] > 0
    t = 0.3
    c = np.abs(extremal_zonal(3, 0.75, t).coeffs)
    live = c > 1e-9 * c[0]
    l = np.arange(c.size)
    assert np.all(c[live] <= c[0] * t ** l[live] * (1 + 1e-12))
    q = t / (1 + math.sqrt(1 - t * t))
    ratios = c[3:12] / c[2:11]
    assert np.all(np.abs(ratios / q - 1) < 0.15)


def test_sharp_constant_is_degree_zero_multiplier():
    for n, g in [(3, 0.75), (4, 1.4), (7, 3.1)]:
        m0 = gjms_multiplier(ModelGeometry("ball_geodesic", n, 0), g)
        assert beckner_constant(n, g) == pytest.approx(m0, rel=1e-13)


def test_order_range():
    with pytest.raises(ConfigError):
        beckner_lhs(ZonalFunction(3, np.array([1.0])), 1.5)
    with pytest.raises(ConfigError):
        extremal_zonal(3, 0.75, 1.0)


def test_trace_rhs_single_datum():
    p = GammaParams(5, 2.3)
    f = extremal_zonal(5, 0.3, 0.4)
    # only j = 2: order |gamma - 4| = 1.7
    rhs = ball_trace_rhs([None, None, f], p)
    ref = trace_constants(p, 2)[1] * 2 ** -1.7 * beckner_lhs(f, 1.7)
    assert rhs == pytest.approx(ref, rel=1e-14)


def test_trace_rhs_constant_data_reduce_to_degree_zero():
    p = GammaParams(5, 2.3)
    data = [ZonalFunction(5, np.array([1.0 + j])) for j in range(3)]
    assert ball_trace_rhs(data, p) == pytest.approx(zonal_extension_energy(data, p), rel=1e-12)


def test_trace_chain_on_extremal_data():
    p = GammaParams(5, 2.3)
    data = [extremal_zonal(5, mu, t) for mu, t in zip((2.3, 0.3, 1.7), (0.2, 0.5, 0.35))]
    rhs = ball_trace_rhs(data, p)
    E = zonal_extension_energy(data, p)
    assert rhs <= E * (1 + 1e-8)
    assert rhs == pytest.approx(E, rel=1e-6)
    with pytest.raises(ConfigError):
        ball_trace_rhs(data[:2], p)
