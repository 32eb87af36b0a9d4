"""
Sharp fractional Sobolev inequality on the round sphere for zonal functions.

For f on S^n and 0 < g < n/2,

    Gamma((n+2g)/2)/Gamma((n-2g)/2) w_n^{2g/n} ||f||_{2n/(n-2g)}^2 <= int f P_g f,

with equality on the conformal images of constants, (1 - t cos(theta))^{(2g-n)/2}.
Zonal functions are expanded in Gegenbauer polynomials of cos(theta),
normalised to unit L^2 norm on S^n, so the right side is sum c_l^2 m_l.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import eval_gegenbauer, gammaln, roots_gegenbauer

from .boundary import ModelGeometry
from .constants import GammaParams, omega, trace_constants
from .errors import ConfigError, TruncationError
from .extension import gjms_multiplier
from .numerics import gamma_ratio

__all__ = [
    "ZonalFunction",
    "beckner_constant",
    "beckner_lhs",
    "beckner_ratio",
    "extremal_zonal",
    "ball_trace_rhs",
    "zonal_extension_energy",
]


def _norm_sq(n, l):
    """int_{S^n} C_l^lam(cos theta)^2, lam = (n-1)/2."""
    lam = (n - 1) / 2
    h = math.exp(math.log(math.pi) + (1 - 2 * lam) * math.log(2) + gammaln(l + 2 * lam)
                 - gammaln(l + 1) - 2 * gammaln(lam)) / (l + lam)
    return omega(n - 1) * h


@dataclass(frozen=True)
class ZonalFunction:
    """sum_l c_l Z_l(cos theta) with int_{S^n} Z_l^2 = 1."""

    n: int
    coeffs: np.ndarray

    @property
    def L(self):
        return len(self.coeffs) - 1

    def basis(self, x):
        x = np.asarray(x, dtype=float)
        lam = (self.n - 1) / 2
        return np.array([eval_gegenbauer(l, lam, x) / math.sqrt(_norm_sq(self.n, l))
                         for l in range(self.L + 1)])

    def __call__(self, x):
        """Value at cos(theta) = x."""
        return np.tensordot(self.coeffs, self.basis(x), axes=1)

    @classmethod
    def project(cls, n, f, L, nodes=None):
        """Coefficients of f(cos theta) up to degree L by Gauss-Gegenbauer quadrature."""
        lam = (n - 1) / 2
        x, w = roots_gegenbauer(nodes or 2 * L + 60, lam)
        z = cls(n, np.zeros(L + 1))
        # dtheta sin^{n-1} = (1-x^2)^{lam-1/2} dx
        c = omega(n - 1) * (z.basis(x) * (w * f(x))).sum(axis=1)
        return cls(n, c)

    def l2_squared(self):
        return float(np.sum(self.coeffs ** 2))

    def sobolev_form(self, gamma, operator=None):
        """int f P f, with P the multiplier of order 2 gamma (or ``operator(l)``)."""
        op = operator or (lambda l: gjms_multiplier(ModelGeometry("ball_geodesic", self.n, l), gamma))
        return float(sum(c * c * op(l) for l, c in enumerate(self.coeffs)))


def _sign_changes(f, a, b, m=400):
    th = np.linspace(a, b, m + 1)
    v = f(th)
    out = [a]
    for i in range(m):
        if v[i] == 0.0 and i > 0:
            out.append(th[i])
        elif v[i] * v[i + 1] < 0:
            out.append(brentq(f, th[i], th[i + 1], xtol=1e-15))
    out.append(b)
    return out


def lp_integral(f, p):
    """int_{S^n} |f|^p, split at the sign changes of f."""
    n = f.n
    g = lambda th: f(np.cos(th))
    pts = _sign_changes(g, 0.0, math.pi)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = quad(lambda th: abs(float(g(th))) ** p * math.sin(th) ** (n - 1), a, b,
                      epsabs=0.0, epsrel=1e-13, limit=400)
        total += val
    return omega(n - 1) * total


def beckner_constant(n, gamma):
    """Gamma((n+2g)/2)/Gamma((n-2g)/2), the sharp constant without the area factor."""
    return gamma_ratio((n + 2 * gamma) / 2, (n - 2 * gamma) / 2)


def beckner_lhs(f, gamma):
    """Gamma((n+2g)/2)/Gamma((n-2g)/2) w_n^{2g/n} (int |f|^{2n/(n-2g)})^{(n-2g)/n}."""
    n = f.n
    if not 0 < gamma < n / 2:
        raise ConfigError("order out of range (0, n/2)")
    p, q = 2 * n / (n - 2 * gamma), (n - 2 * gamma) / n
    assert abs(p * q - 2) < 1e-15
    return beckner_constant(n, gamma) * omega(n) ** (2 * gamma / n) * lp_integral(f, p) ** q


def beckner_ratio(f, gamma):
    """int f P_g f divided by the sharp Sobolev bound (>= 1)."""
    if not np.any(f.coeffs):
        raise ConfigError("f is identically zero")
    return f.sobolev_form(gamma) / beckner_lhs(f, gamma)


def extremal_zonal(n, gamma, t_param, tail=1e-10, Lmax=200):
    """(1 - t cos(theta))^{(2 gamma - n)/2} in the zonal basis.

    The degree grows until the last two coefficients fall below ``tail``
    relative to c_0.
    """
    if not 0 <= t_param < 1:
        raise ConfigError("t_param must lie in [0, 1)")
    e = (2 * gamma - n) / 2
    f = lambda x: (1 - t_param * x) ** e
    if t_param == 0:
        return ZonalFunction(n, np.array([math.sqrt(omega(n))]))
    # decay rate of the coefficients
    q = t_param / (1 + math.sqrt(1 - t_param ** 2))
    L = min(Lmax, max(8, int(math.ceil(math.log(tail * 1e-3) / math.log(q))) + 4))
    z = ZonalFunction.project(n, f, L)
    c = np.abs(z.coeffs)
    if max(c[-1], c[-2]) > tail * c[0]:
        raise TruncationError(f"extremal expansion not converged at degree {L}")
    return z


def _shifted_orders(params):
    g, h = params.gamma, params.half_floor
    return [g - 2 * j if j <= h else 2 * j - g for j in range(params.floor_g + 1)]


def ball_trace_rhs(data, params, normalisation="scattering"):
    """Sum_j varsigma_j times the sharp Sobolev bound of the j-th boundary datum.

    ``data[j]`` is the ZonalFunction B_2j U (j <= floor(gamma/2)) or
    B_{2gamma-2j} U (otherwise), or None. The order of term j is mu_j =
    |gamma - 2j|; each Sobolev bound uses the exponent pair
    (2n/(n-2mu_j), (n-2mu_j)/n) and the area factor w_n^{2mu_j/n}. With the
    operators c_mu S the bound carries an extra 2^{-mu_j}.
    """
    mus = _shifted_orders(params)
    if len(data) != len(mus):
        raise ConfigError(f"expected {len(mus)} data entries")
    total = 0.0
    for j, (f, mu) in enumerate(zip(data, mus)):
        if f is None:
            continue
        if not 0 < mu < params.n / 2:
            raise ConfigError(f"shifted order {mu:g} outside (0, n/2)")
        vs = trace_constants(params, j)[1]
        scale = 2.0 ** (-mu) if normalisation == "scattering" else 1.0
        total += vs * scale * beckner_lhs(f, mu)
    return total


def zonal_extension_energy(data, params, normalisation="scattering"):
    """sum_j varsigma_j int f_j P_{mu_j} f_j: the energy of the solved extension."""
    from .extension import fractional_operator_eigenvalue
    total = 0.0
    for j, (f, mu) in enumerate(zip(data, _shifted_orders(params))):
        if f is None:
            continue
        vs = trace_constants(params, j)[1]
        if normalisation == "scattering":
            op = lambda l, mu=mu: fractional_operator_eigenvalue(
                ModelGeometry("ball_geodesic", params.n, l), mu)
        else:
            op = None
        total += vs * f.sobolev_form(mu, op)
    return total
