import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gjms_lab.errors import ConfigError
from gjms_lab.transforms import (QuadraticTest, cayley, covariance_check_B0, isometry_check,
                                 jacobian_identities, mobius, mobius_inverse, mobius_jacobian,
                                 p_covariance_check, sample_points)


def test_special_points():
    np.testing.assert_allclose(mobius(np.zeros(3), 1.0), [[0, 0, 0, 0]], atol=1e-16)
    np.testing.assert_allclose(mobius(np.zeros(3), 0.0), [[0, 0, 0, 1]], atol=1e-16)
    # the point at infinity goes to the south pole
    far = cayley(np.array([[1e8, 0.0, 0.0]]))
    np.testing.assert_allclose(far, [[0, 0, 0, -1]], atol=1e-7)


@settings(max_examples=50)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.floats(1e-3, 10))
def test_interior_maps_to_interior_and_back(x, y):
    x = np.array([x[:-1]])
    w = mobius(x, y)
    assert np.linalg.norm(w) < 1
    xb, yb = mobius_inverse(w)
    np.testing.assert_allclose(xb, x, atol=1e-9 * (1 + np.abs(x).max()) ** 2)
    assert yb[0] == pytest.approx(y, rel=1e-9, abs=1e-12)


@settings(max_examples=30)
@given(st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_boundary_lands_on_sphere(x):
    assert np.linalg.norm(cayley(np.array([x]))) == pytest.approx(1.0, abs=1e-14)


def test_jacobian_against_differences():
    rng = np.random.default_rng(0)
    x, y = sample_points(3, 5, rng)
    J = mobius_jacobian(x, y)
    h = 1e-6
    for i in range(4):
        dx, dy = np.zeros_like(x), np.zeros_like(y)
        if i < 3:
            dx[:, i] = h
        else:
            dy += h
        fd = (mobius(x + dx, y + dy) - mobius(x - dx, y - dy)) / (2 * h)
        np.testing.assert_allclose(J[:, :, i], fd, atol=1e-8)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_jacobian_identities(n):
    x, y = sample_points(n, 50, np.random.default_rng(n))
    assert jacobian_identities(x, y).max() <= 1e-12


def test_isometry_on_polynomials():
    n = 3
    x, y = sample_points(n, 20, np.random.default_rng(1))
    one = QuadraticTest(1.0, np.zeros(n + 1), np.zeros((n + 1, n + 1)))
    assert isometry_check(one, x, y) <= 1e-10
    last = QuadraticTest(0.0, np.eye(n + 1)[-1], np.zeros((n + 1, n + 1)))
    assert isometry_check(last, x, y) <= 1e-6
    sq = QuadraticTest(0.0, np.zeros(n + 1), np.eye(n + 1))
    assert isometry_check(sq, x, y) <= 1e-6
    rng = np.random.default_rng(2)
    for _ in range(4):
        assert isometry_check(QuadraticTest.random(n, rng), x, y) <= 1e-6


def test_isometry_needs_interior_points():
    v = QuadraticTest.random(3, np.random.default_rng(3))
    with pytest.raises(ConfigError):
        isometry_check(v, np.zeros((1, 3)), np.array([0.01]))


def test_restriction_covariance():
    x = np.random.default_rng(4).uniform(-1.5, 1.5, (20, 3))
    assert covariance_check_B0(lambda w: np.ones(len(w)), x, 0.7) <= 1e-11
    U = lambda w: 1 + w[:, -1] + 0.5 * w[:, 0] * w[:, 1]
    assert covariance_check_B0(U, x, 0.7) <= 1e-6


@pytest.mark.parametrize("degree", [0, 1])
@pytest.mark.parametrize("n,g", [(3, 0.75), (4, 1.4), (5, 2.3)])
def test_operator_covariance(n, g, degree):
    x = np.random.default_rng(5).uniform(-2, 2, (15, n))
    assert p_covariance_check(n, g, x, degree) <= 1e-6


def test_operator_covariance_degree_range():
    with pytest.raises(ConfigError):
        p_covariance_check(3, 0.75, np.zeros((1, 3)), 2)
