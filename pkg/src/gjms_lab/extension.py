"""
Per-mode Poisson solutions of (Delta_+ + s(n-s)) u = 0 and the scattering
eigenvalues they define.

Near the boundary every solution is a combination of the two Frobenius
branches x^{n-s} F(x) and x^s G(x). The decaying (halfspace) or regular
(ball) solution is found away from the boundary and connected to the
branches at one matching point; the ratio of the connection coefficients
is the scattering eigenvalue S.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .boundary import ModelGeometry, TwoBranchSeries, change_defining_function
from .errors import ConfigError, MatchingError, ResonanceError
from .numerics import TruncatedSeries, gamma_ratio

__all__ = [
    "RadialSolution",
    "poisson_mode",
    "scattering_eigenvalue",
    "gjms_multiplier",
    "fractional_operator_eigenvalue",
    "scattering_closed_form",
    "neumann_constant",
]

BOUNDARY_ORDER = 80     # powers of the defining function in each branch
INTERIOR_ORDER = 160    # powers of t in the ball's regular solution


@dataclass(frozen=True, eq=False)
class RadialSolution:
    """Normalised Poisson solution x^{n-s}F + S x^s G on one mode.

    ``F_branch`` and ``G_branch`` are the Frobenius series in the defining
    function of ``geom`` (leading coefficients 1); ``connection`` holds
    (F value, G value) = (1, S) after normalisation and ``raw`` the
    unnormalised matching coefficients.
    """

    geom: ModelGeometry
    s: float
    F_branch: TruncatedSeries
    G_branch: TruncatedSeries
    connection: tuple
    raw: tuple = (1.0, 0.0)
    match_point: float = 0.0
    interior: TruncatedSeries | None = None
    _far: object = field(default=None, repr=False)

    @property
    def mu(self):
        return self.s - self.geom.n / 2

    @property
    def S(self):
        return self.connection[1]

    def near(self, x):
        """Value from the boundary branches (valid for x up to the match point)."""
        return self.F_branch.evaluate(x) + self.S * self.G_branch.evaluate(x)

    def value(self, x):
        """Normalised solution at defining-function values x (vectorised)."""
        x = np.asarray(x, dtype=float)
        if self._far is None:
            return self.near(x)
        out = np.empty(x.shape)
        inner = x <= self.match_point
        out[inner] = self.near(x[inner])
        if np.any(~inner):
            out[~inner] = self._far(x[~inner])
        return out

    def boundary_series(self, params):
        """rho^{-n/2+gamma} times the solution, as a TwoBranchSeries.

        The two branch offsets gamma - mu and gamma + mu must land on the
        ladders 2N or 2[gamma] + 2N.
        """
        g, fr = params.gamma, params.frac_g
        order = self.F_branch.order
        even = np.zeros(order + 1)
        shifted = np.zeros(order + 1)
        for coef, branch in ((1.0, self.F_branch), (self.S, self.G_branch)):
            e = branch.offset - self.geom.n / 2 + g
            for target, base in ((even, 0.0), (shifted, 2 * fr)):
                m = e - base
                mi = int(round(m))
                if abs(m - mi) < 1e-9 and mi >= 0:
                    target[mi:] += coef * branch.coeffs[: order + 1 - mi]
                    break
            else:
                raise ConfigError(f"branch exponent {e:g} is on neither ladder")
        return TwoBranchSeries(params, even, shifted)


def _check_mu(geom, s):
    mu = s - geom.n / 2
    if not 0 < abs(mu):
        raise ConfigError("s = n/2 gives a double indicial root")
    if abs(2 * mu - round(2 * mu)) < 1e-8 and round(2 * mu) % 2 == 0:
        raise ResonanceError(f"2*mu = {2 * mu:g} is an even integer: logarithmic branch")
    return mu


def _match(Fv, Fd, Gv, Gd, u, du):
    M = np.array([[Fv, Gv], [Fd, Gd]])
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e10:
        raise MatchingError(f"connection system is ill-conditioned (cond {cond:.2e})")
    return np.linalg.solve(M, np.array([u, du]))


def _ball_interior(n, l, lam, order):
    # t^2 u'' + [n + 2(n-1) t^2/(1-t^2)] t u' + [-L + 4 lam t^2/(1-t^2)^2] u = 0
    t = TruncatedSeries(np.eye(1, order + 1, 1)[0])
    t2 = t * t
    iq = (1.0 - t2).reciprocal()
    A = t * 0.0 + 1.0
    B = n + (t2 * iq) * (2.0 * (n - 1))
    C = -l * (l + n - 1) + (t2 * iq * iq) * (4.0 * lam)
    from .boundary import EulerOperator
    return EulerOperator(A, B, C).frobenius(float(l), order)


def _solve_ball(geom, s, order):
    n, l = geom.n, int(geom.mode)
    mu = s - n / 2
    op = ModelGeometry("ball_geodesic", n, l).operator(order)
    F = op.frobenius(n / 2 - mu, order, lam=mu * mu)
    G = op.frobenius(n / 2 + mu, order, lam=mu * mu)
    interior = _ball_interior(n, l, s * (n - s), INTERIOR_ORDER)
    t_star = 0.5
    r_star = 2 * (1 - t_star) / (1 + t_star)
    dt_dr = -4.0 / (2 + r_star) ** 2
    u = float(interior.evaluate(t_star))
    du = float(interior.differentiate().evaluate(t_star)) * dt_dr
    a, b = _match(F.evaluate(r_star), F.differentiate().evaluate(r_star),
                  G.evaluate(r_star), G.differentiate().evaluate(r_star), u, du)

    def far(r, interior=interior, a=a):
        return interior.evaluate((2 - r) / (2 + r)) / a

    return F, G, (a, b), r_star, interior, far


def _solve_halfspace(geom, s, order):
    n, xi = geom.n, geom.mode
    mu = s - n / 2
    op = geom.operator(order)
    F = op.frobenius(n / 2 - mu, order, lam=mu * mu)
    if xi == 0:
        G = TruncatedSeries.monomial(n / 2 + mu, order)
        return F, G, (1.0, 0.0), 0.0, None
    G = op.frobenius(n / 2 + mu, order, lam=mu * mu)
    y_far, y_m = 40.0 / xi, 1.0 / xi

    # v = u e^{xi y} removes the exponential scale of the decaying solution
    def rhs(y, z):
        v, dv = z
        d2 = ((2 * xi * y * y - (1 - n) * y) * dv
              + ((1 - n) * xi * y - n * n / 4 + mu * mu) * v) / (y * y)
        return [dv, d2]

    # large-argument expansion of the modified Bessel function K_mu
    z = xi * y_far
    terms, t, k = [1.0], 1.0, 1
    while k < 12:
        t *= (4 * mu * mu - (2 * k - 1) ** 2) / (8 * k * z)
        terms.append(t)
        k += 1
    p = (n - 1) / 2
    v0 = sum(terms) * y_far ** p
    dv0 = sum(c * (p - i) for i, c in enumerate(terms)) * y_far ** (p - 1)
    sol = solve_ivp(rhs, (y_far, y_m), [v0, dv0], method="DOP853",
                    rtol=1e-12, atol=1e-300, dense_output=True)
    if not sol.success:
        raise MatchingError(f"backward integration failed: {sol.message}")
    v, dv = sol.y[:, -1]
    e = math.exp(-xi * y_m)
    u, du = v * e, (dv - xi * v) * e
    a, b = _match(F.evaluate(y_m), F.differentiate().evaluate(y_m),
                  G.evaluate(y_m), G.differentiate().evaluate(y_m), u, du)

    def far(y, sol=sol, a=a):
        y = np.asarray(y, dtype=float)
        out = np.zeros(y.shape)
        inside = y <= y_far
        out[inside] = sol.sol(y[inside])[0] * np.exp(-xi * y[inside]) / a
        # beyond the starting point keep the leading asymptotic profile
        out[~inside] = v0 * (y[~inside] / y_far) ** p * np.exp(-xi * y[~inside]) / a
        return out

    return F, G, (a, b), y_m, far


@functools.lru_cache(maxsize=1024)
def poisson_mode(geom, s, order=BOUNDARY_ORDER):
    """Solve the Poisson equation on one mode and connect it to the boundary.

    Returns a RadialSolution normalised so that the F-branch coefficient is 1.
    For ball_literal the geodesic solution is re-expanded in the literal
    defining function.
    """
    _check_mu(geom, s)
    if geom.kind == "halfspace":
        F, G, (a, b), xm, far = _solve_halfspace(geom, s, order)
        return RadialSolution(geom, s, F, G, (1.0, b / a), (a, b), xm, None, far)
    F, G, (a, b), xm, interior, far = _solve_ball(geom, s, order)
    if geom.kind == "ball_geodesic":
        return RadialSolution(geom, s, F, G, (1.0, b / a), (a, b), xm, interior, far)
    return _literal_from_geodesic(geom, s, F, G, (a, b), interior)


def _literal_from_geodesic(geom, s, F, G, ab, interior):
    # rho_B = r (1 + r/2)^{-2}; rewrite r^alpha H(r) as rho_B^alpha * (series)
    order = F.order
    r = TruncatedSeries(np.eye(1, order + 1, 1)[0])
    tau = (1.0 + r * 0.5).log().scale(-2.0)
    fwd = tau.exp().shift(1.0)
    phi = fwd.revert()
    ratio = TruncatedSeries(phi.coeffs)

    def move(branch):
        body = TruncatedSeries(branch.coeffs).compose(phi) * ratio.power(branch.offset)
        return TruncatedSeries(body.coeffs, branch.offset)

    a, b = ab
    rho_m = 0.5 * (1 - 0.25)       # t = 1/2

    def far(x, interior=interior, a=a):
        return interior.evaluate(np.sqrt(1 - 2 * np.asarray(x))) / a

    # the literal expansion converges only for rho_B < 1/2 - a bit; use the
    # interior series above t = 1/2
    return RadialSolution(geom, s, move(F), move(G), (1.0, b / a), ab, rho_m, interior, far)


def scattering_eigenvalue(geom, s):
    """G/F boundary ratio of the normalised Poisson solution."""
    return poisson_mode(geom, float(s)).S


def gjms_multiplier(geom, gamma_eff):
    """Symbol of the fractional conformal Laplacian of order 2*gamma_eff on one mode.

    Ball: Gamma(l + n/2 + g)/Gamma(l + n/2 - g). Halfspace: |xi|^{2g}.
    """
    g = float(gamma_eff)
    if geom.kind == "halfspace":
        return 0.0 if geom.mode == 0 else geom.mode ** (2 * g)
    l, n = geom.mode, geom.n
    return gamma_ratio(l + n / 2 + g, l + n / 2 - g)


def scattering_closed_form(geom, mu):
    """2^{-2mu} Gamma(-mu)/Gamma(mu) times the multiplier (Bessel/2F1 connection)."""
    return 2.0 ** (-2 * mu) * gamma_ratio(-mu, mu) * gjms_multiplier(geom, mu)


def fractional_operator_eigenvalue(geom, mu):
    """Eigenvalue of c_mu S(n/2 + mu) on the mode, c_mu = 2^mu Gamma(mu)/Gamma(-mu).

    With this normalisation of c_mu the operator is 2^{-mu} times the
    multiplier of ``gjms_multiplier``; this is the operator that enters
    the extension and trace identities.
    """
    return 2.0 ** (-mu) * gjms_multiplier(geom, mu)


def neumann_constant(geom, params):
    """-2^{2g-1} Gamma(g)/Gamma(1-g) lim y^{1-2g} d/dy U for U the extension of 1.

    Only for gamma in (0, 1). U = y^{-n/2+gamma} times the Poisson solution,
    assembled from the Frobenius data; the limit is read off the series.
    """
    g = params.gamma
    if not 0 < g < 1:
        raise ConfigError("the Neumann form of the extension needs gamma in (0, 1)")
    U = poisson_mode(geom, geom.n / 2 + g).boundary_series(params)
    total = 0.0
    for piece in U.pieces():
        d = piece.differentiate().shift(1 - 2 * g)
        ex = d.exponents()
        neg = ex < -1e-12
        if np.any(np.abs(d.coeffs[neg]) > 1e-12 * (np.abs(d.coeffs).max() + 1e-300)):
            raise ConfigError("y^{1-2gamma} dU/dy has no finite limit")
        total += d.coefficient_of(0.0)
    return -(2.0 ** (2 * g - 1)) * gamma_ratio(g, 1 - g) * total
