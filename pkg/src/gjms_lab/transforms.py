"""
The Moebius map from the upper halfspace to the unit ball, its boundary
restriction (the inverse stereographic projection), Jacobians, and
point-sample checks that the map is an isometry of the hyperbolic models
and carries boundary data with the expected Jacobian weights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, hyp2f1

from .boundary import ModelGeometry
from .errors import ConfigError
from .extension import gjms_multiplier

__all__ = [
    "mobius",
    "mobius_inverse",
    "mobius_jacobian",
    "cayley",
    "jacobian_identities",
    "JacobianRecord",
    "isometry_check",
    "QuadraticTest",
    "covariance_check_B0",
    "p_covariance_check",
    "sample_points",
]


def _split(x, y):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.broadcast_to(np.asarray(y, dtype=float), x.shape[:1])
    return x, y


def mobius(x, y):
    """(2x, 1 - |x|^2 - y^2) / ((1+y)^2 + |x|^2), rows of x are points of R^n."""
    x, y = _split(x, y)
    r2 = np.sum(x * x, axis=1)
    D = (1 + y) ** 2 + r2
    return np.column_stack([2 * x / D[:, None], (1 - r2 - y * y) / D])


def mobius_inverse(w):
    """Closed-form inverse: (x, y) with x = 2w'/E, y = (1-|w|^2)/E, E = (1+w_{n+1})^2 + |w'|^2."""
    w = np.atleast_2d(np.asarray(w, dtype=float))
    wp, wl = w[:, :-1], w[:, -1]
    E = (1 + wl) ** 2 + np.sum(wp * wp, axis=1)
    return 2 * wp / E[:, None], (1 - np.sum(w * w, axis=1)) / E


def cayley(x):
    """Boundary map R^n -> S^n, the y = 0 restriction of the Moebius map."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return mobius(x, np.zeros(len(x)))


def mobius_jacobian(x, y):
    """Derivative matrices d w / d(x, y), shape (points, n+1, n+1)."""
    x, y = _split(x, y)
    m, n = x.shape
    r2 = np.sum(x * x, axis=1)
    D = (1 + y) ** 2 + r2
    N = 1 - r2 - y * y
    J = np.zeros((m, n + 1, n + 1))
    eye = np.eye(n)
    J[:, :n, :n] = 2 * eye / D[:, None, None] - 4 * x[:, :, None] * x[:, None, :] / (D ** 2)[:, None, None]
    J[:, :n, n] = -4 * x * ((1 + y) / D ** 2)[:, None]
    J[:, n, :n] = (-2 * x * D[:, None] - 2 * x * N[:, None]) / (D ** 2)[:, None]
    J[:, n, n] = (-2 * y * D - 2 * (1 + y) * N) / D ** 2
    return J


@dataclass(frozen=True)
class JacobianRecord:
    defining: np.ndarray     # (1-|w|^2)/2 minus 2y/D
    volume: np.ndarray       # |det DM| minus (2/D)^{n+1}
    boundary: np.ndarray     # sqrt det(DC^T DC) minus (2/(1+|x|^2))^n

    def max(self):
        return float(max(np.abs(self.defining).max(), np.abs(self.volume).max(),
                         np.abs(self.boundary).max()))


def jacobian_identities(x, y):
    """Residuals of the three Jacobian identities at the given points."""
    x, y = _split(x, y)
    n = x.shape[1]
    r2 = np.sum(x * x, axis=1)
    D = (1 + y) ** 2 + r2
    w = mobius(x, y)
    defining = (1 - np.sum(w * w, axis=1)) / 2 - 2 * y / D
    volume = np.abs(np.linalg.det(mobius_jacobian(x, y))) - (2 / D) ** (n + 1)
    Jc = mobius_jacobian(x, np.zeros(len(x)))[:, :, :n]
    g = np.einsum("mki,mkj->mij", Jc, Jc)
    boundary = np.sqrt(np.linalg.det(g)) - (2 / (1 + r2)) ** n
    return JacobianRecord(defining, volume, boundary)


def sample_points(n, count, rng, margin=0.1):
    """Halfspace points whose images stay at distance >= margin from the sphere."""
    out_x, out_y = [], []
    while len(out_y) < count:
        x = rng.uniform(-1.5, 1.5, n)
        y = rng.uniform(0.1, 2.0)
        if np.linalg.norm(mobius(x, y)[0]) <= 1 - margin:
            out_x.append(x)
            out_y.append(y)
    return np.array(out_x), np.array(out_y)


# ---------------------------------------------------------------------------
# isometry


@dataclass(frozen=True)
class QuadraticTest:
    """v(w) = a + b.w + w^T C w with C symmetric."""

    a: float
    b: np.ndarray
    C: np.ndarray

    def __call__(self, w):
        w = np.atleast_2d(w)
        return self.a + w @ self.b + np.einsum("mi,ij,mj->m", w, self.C, w)

    def ball_laplacian(self, w):
        """Hyperbolic Laplacian of v for the metric 4|dw|^2/(1-|w|^2)^2."""
        w = np.atleast_2d(w)
        n = w.shape[1] - 1
        s = 1 - np.sum(w * w, axis=1)
        lap = 2 * np.trace(self.C)
        radial = w @ self.b + 2 * np.einsum("mi,ij,mj->m", w, self.C, w)
        return s * s / 4 * (lap + 2 * (n - 1) * radial / s)

    @classmethod
    def random(cls, n, rng):
        A = rng.standard_normal((n + 1, n + 1))
        return cls(float(rng.standard_normal()), rng.standard_normal(n + 1), (A + A.T) / 2)


def _fd2(f, x, y, axis, h):
    """Fourth-order central first and second derivatives along one coordinate."""
    def at(t):
        xs, ys = x.copy(), y.copy()
        if axis < x.shape[1]:
            xs[:, axis] += t
        else:
            ys = ys + t
        return f(xs, ys)
    fm2, fm1, f0, fp1, fp2 = (at(t) for t in (-2 * h, -h, 0.0, h, 2 * h))
    d1 = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12 * h)
    d2 = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    return d1, d2


def halfspace_laplacian_fd(u, x, y, h=1e-3):
    """y^2 (Lap_x u + u_yy) - (n-1) y u_y by Richardson-extrapolated differences."""
    x, y = _split(x, y)
    n = x.shape[1]

    def once(h):
        lap = 0.0
        for i in range(n):
            lap = lap + _fd2(u, x, y, i, h)[1]
        dy, dyy = _fd2(u, x, y, n, h)
        return y * y * (lap + dyy) - (n - 1) * y * dy

    return (16 * once(h / 2) - once(h)) / 15


def isometry_check(v, x, y, h=1e-3):
    """max |(Lap_B v)(M(x, y)) - Lap_H(v o M)(x, y)|."""
    x, y = _split(x, y)
    if np.any(y < 0.1 - 1e-12):
        raise ConfigError("sample points must keep y >= 0.1")
    lhs = v.ball_laplacian(mobius(x, y))
    rhs = halfspace_laplacian_fd(lambda xs, ys: v(mobius(xs, ys)), x, y, h)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# boundary correspondence


def _neville_zero(hs, vals):
    """Polynomial extrapolation of vals(h) to h = 0."""
    p = [np.asarray(v, dtype=float) for v in vals]
    for k in range(1, len(hs)):
        p = [(hs[i + k] * p[i] - hs[i] * p[i + 1]) / (hs[i + k] - hs[i])
             for i in range(len(p) - 1)]
    return p[0]


def covariance_check_B0(U, x, gamma):
    """j = 0 boundary correspondence for a smooth U on the closed ball.

    Left: the restriction of U to the sphere at C(x). Right:
    J_C^{(2g-n)/2n} times the y -> 0 limit of J_M^{(n-2g)/(2n+2)} U o M,
    the limit taken by polynomial extrapolation in y.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[1]
    # weights cancel exponent by exponent on the boundary
    assert abs((-n + 2 * gamma) / (2 * n) + (n - 2 * gamma) / (2 * n)) == 0.0
    r2 = np.sum(x * x, axis=1)
    Jc = (2 / (1 + r2)) ** n
    lhs = U(cayley(x))
    hs = [0.005 * k for k in range(1, 8)]
    vals = []
    for h in hs:
        D = (1 + h) ** 2 + r2
        JM = (2 / D) ** (n + 1)
        vals.append(JM ** ((n - 2 * gamma) / (2 * n + 2)) * U(mobius(x, np.full(len(x), h))))
    rhs = Jc ** ((-n + 2 * gamma) / (2 * n)) * _neville_zero(hs, vals)
    return float(np.max(np.abs(lhs - rhs)))


def _frac_lap_power(n, g, sigma, r):
    """(-Lap)^g (1+|x|^2)^{-sigma} at |x| = r (hypergeometric closed form)."""
    c = np.exp(2 * g * np.log(2) + gammaln(sigma + g) + gammaln(n / 2 + g)
               - gammaln(sigma) - gammaln(n / 2))
    return c * hyp2f1(sigma + g, n / 2 + g, n / 2, -r * r)


def p_covariance_check(n, gamma, x, degree=1):
    """(P F) o C = J_C^{-(n+2g)/2n} (-Lap)^g (J_C^{(n-2g)/2n} F o C) for F = w_{n+1}^degree, degree 0 or 1.

    P is the Gamma-ratio multiplier on S^n; the right side uses the
    closed form of the fractional Laplacian of (1+|x|^2)^{-sigma}.
    """
    if degree not in (0, 1):
        raise ConfigError("degree must be 0 or 1")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    r = np.sqrt(np.sum(x * x, axis=1))
    a = (n - 2 * gamma) / 2
    F = cayley(x)[:, -1] ** degree
    m = gjms_multiplier(ModelGeometry("ball_geodesic", n, degree), gamma)
    lhs = m * F
    # J_C^{(n-2g)/2n} F o C = 2^a (1+r^2)^{-a} ((1-r^2)/(1+r^2))^degree
    if degree == 0:
        frac = 2 ** a * _frac_lap_power(n, gamma, a, r)
    else:
        frac = 2 ** a * (2 * _frac_lap_power(n, gamma, a + 1, r) - _frac_lap_power(n, gamma, a, r))
    Jc = (2 / (1 + r * r)) ** n
    rhs = Jc ** (-(n + 2 * gamma) / (2 * n)) * frac
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))))
