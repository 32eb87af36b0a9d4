"""
The weighted operator L_2k, the Dirichlet problem for it, and the energy
identities, all on one boundary mode.

Per mode a function U is a ``ModeProfile``: a sum of

  * exact Poisson pieces rho^{-n/2+gamma} u_mu(rho), killed by L_2k;
  * a finite two-branch polynomial times a smooth cutoff (1 near the
    boundary, 0 beyond ``b``);
  * interior bumps, polynomials times a smooth window supported away from
    the boundary.

Only the last two feel L_2k, so every bulk integral lives on [0, b]. Near
the boundary ([0, a], where the cutoff is 1) the integrand is a two-branch
series and is integrated term by term; on [a, b] it is evaluated from
local Taylor jets and integrated by composite Gauss-Legendre.

The boundary measure is normalised per mode: the boundary pairing of two
unit modes is 1, so boundary integrals become plain products.
"""
from __future__ import annotations

import math
from functools import lru_cache
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import beta as beta_fn, betainc, binom

from .boundary import ModelGeometry, TwoBranchSeries, _negative_check, all_boundary_values
from .constants import GammaParams, ladder_constants, trace_constants, trace_constants_alternates
from .errors import ConfigError, NonintegrableError, OrderExhaustedError, TruncationError
from .extension import fractional_operator_eigenvalue, gjms_multiplier, poisson_mode
from .numerics import TOL, TruncatedSeries

__all__ = [
    "BoundaryData",
    "ModeSolution",
    "ModeProfile",
    "ModeBasis",
    "boundary_map",
    "apply_L2k",
    "solve_dirichlet",
    "extension_residual",
    "extension_terms",
    "bulk_pairing",
    "dirichlet_form_Q",
    "energy",
    "trace_gap",
    "main_identity_residual",
    "main_identity_report",
    "lambda1_probe",
    "lambda1_lower_bound",
    "random_profile",
    "bump",
    "trace_weights",
    "default_cutoff",
    "sigma_sum",
    "varsigma_sum",
]

ORDER = 80          # series order used near the boundary
PANELS = 6          # Gauss-Legendre panels per smooth segment
NODES = 32          # nodes per panel


# ---------------------------------------------------------------------------
# the operator on series


def _chain(pieces, op, params):
    """(-1)^k prod (D - (gamma-2l)^2) on each piece, with absolute bounds."""
    vals = list(pieces)
    bnds = [TruncatedSeries(np.abs(p.coeffs), p.offset) for p in pieces]
    for l in range(params.k):
        lam = (params.gamma - 2 * l) ** 2
        vals = [op.apply(v, lam) for v in vals]
        bnds = [op.apply_bound(b, lam) for b in bnds]
    sign = (-1.0) ** params.k
    return [v.scale(sign) for v in vals], bnds


def apply_L2k(U, geom, params=None):
    """L_2k U = rho^{-n/2+gamma-2k} L+ (rho^{n/2-gamma} U) on a two-branch series.

    The powers rho^{-2k} ... rho^{-1} (and the corresponding slots of the
    shifted ladder) must cancel; they are checked and dropped, so the
    result is again a two-branch series, shorter by 2k.
    """
    params = params or U.params
    k = params.k
    if U.order < 2 * k + 4:
        raise OrderExhaustedError(f"truncation order must be >= {2 * k + 4}")
    op = geom.operator(U.order) if isinstance(geom, ModelGeometry) else geom
    shift = params.n / 2 - params.gamma
    vals, bnds = _chain([p.shift(shift) for p in U.pieces()], op, params)
    back = -shift - 2 * k
    # size of the terms whose cancellation is being judged
    scale = max(float(np.abs(b.coeffs[..., b.exponents() + back < 2.0]).max(initial=0.0))
                for b in bnds) or 1e-300
    out = []
    for v in vals:
        s = v.shift(back)
        _negative_check(s, scale, "L_2k")
        dropped = s.coeffs[: 2 * k]
        if np.any(np.abs(dropped) > TOL["vanishing"] * scale):
            raise TruncationError("L_2k left a term below the ladder start")
        out.append(s.coeffs[2 * k:])
    return TwoBranchSeries(params, out[0], out[1])


# ---------------------------------------------------------------------------
# local Taylor jets (arrays of shape (points, N+1))


def _jmul(a, b):
    N = a.shape[-1]
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape))
    for i in range(N):
        out[..., i:] += a[..., i:i + 1] * b[..., : N - i]
    return out


def _jder(a):
    out = np.zeros_like(a)
    out[..., :-1] = a[..., 1:] * np.arange(1, a.shape[-1])
    return out


def _power_jet(x0, e, N):
    """Jet of rho^e at x0 > 0."""
    i = np.arange(N + 1)
    return binom(e, i) * x0[:, None] ** (e - i)


def _powersum_jet(x0, exps, coefs, N):
    out = np.zeros((x0.size, N + 1))
    for e, c in zip(exps, coefs):
        if c != 0:
            out += c * _power_jet(x0, e, N)
    return out


def _window_poly_jet(x, K, N):
    """Jet in x of x^K (1-x)^K."""
    i = np.arange(N + 1)
    a = binom(K, i) * x[:, None] ** np.maximum(K - i, 0) * (i <= K)
    b = binom(K, i) * (1 - x[:, None]) ** np.maximum(K - i, 0) * (i <= K) * (-1.0) ** i
    return _jmul(a, b)


def _cutoff_jet(x0, a, b, K, N):
    """Jet of 1 - I_x(K+1, K+1), x = (rho - a)/(b - a), clamped to [0, 1]."""
    h = b - a
    x = np.clip((x0 - a) / h, 0.0, 1.0)
    out = np.zeros((x0.size, N + 1))
    out[:, 0] = 1.0 - betainc(K + 1, K + 1, x)
    inside = (x > 0) & (x < 1)
    q = _window_poly_jet(x, K, N)
    i = np.arange(1, N + 1)
    out[:, 1:] = -(q[:, : N] / (i * beta_fn(K + 1, K + 1))) * h ** (-i.astype(float))
    out[~inside, 1:] = 0.0
    return out


def _bump_jet(x0, lo, hi, K, N):
    """Jet of (x(1-x))^{K+1} on [lo, hi], zero outside."""
    h = hi - lo
    x = (x0 - lo) / h
    out = _window_poly_jet(np.clip(x, 0, 1), K + 1, N) * h ** (-np.arange(N + 1.0))
    out[(x <= 0) | (x >= 1)] = 0.0
    return out


def _apply_L_jets(W, x0, geom, params):
    """(-1)^k prod (D - (gamma-2l)^2) on jets W of order 2k; returns values.

    W may carry leading batch axes in front of (points, 2k+1).
    """
    N = W.shape[-1] - 1
    xs = np.zeros((x0.size, N + 1))
    xs[:, 0] = x0
    if N >= 1:
        xs[:, 1] = 1.0
    A, B, C = (s.coeffs for s in geom.coefficients(TruncatedSeries(xs)))
    Axx = _jmul(A, _jmul(xs, xs))
    Bx = _jmul(B, xs)
    for l in range(params.k):
        lam = (params.gamma - 2 * l) ** 2
        # each factor uses up two orders of the jet
        m = W.shape[-1] - 2
        d1 = _jder(W)
        d2 = _jder(d1)
        W = (_jmul(Axx[:, :m], d2[..., :m]) + _jmul(Bx[:, :m], d1[..., :m])
             + _jmul(C[:, :m], W[..., :m]) - lam * W[..., :m])
    return (-1.0) ** params.k * W[..., 0]


def default_cutoff(geom):
    """(a, b): the cutoff is 1 on [0, a] and 0 beyond b."""
    if geom.kind == "halfspace":
        a = 0.4 / max(1.0, geom.mode)
        return a, 4 * a
    if geom.kind == "ball_geodesic":
        return 0.4, 1.4
    return 0.12, 0.4


@lru_cache(maxsize=256)
def boundary_map(geom, params):
    """Matrix of all boundary values on the unit atoms rho^{2m}, rho^{2m+2[gamma]}, m <= floor(gamma).

    The factors only raise exponents and B reads exponents up to
    2 floor(gamma) on each ladder, so on geodesic geometries every boundary
    value of a series is this matrix applied to its first rungs. Rows:
    the even atoms then the shifted ones; columns: B_2j then B_{2j+2[gamma]}.
    """
    if geom.kind == "ball_literal":
        raise ConfigError("the literal ball mixes odd powers; evaluate directly")
    k, order = params.k, 2 * params.floor_g + 8
    rows = []
    for ladder in ("even", "shifted"):
        for m in range(k):
            ev, sh = all_boundary_values(TwoBranchSeries.atom(params, ladder, 2 * m, order), geom)
            rows.append(np.concatenate([ev, sh]))
    out = np.array(rows)
    out.setflags(write=False)
    return out


def _apply_boundary_map(U, geom):
    k = U.params.k
    c = np.concatenate([U.even.coeffs[0 : 2 * k : 2], U.shifted.coeffs[0 : 2 * k : 2]])
    v = c @ boundary_map(geom, U.params)
    return v[:k], v[k:]


@dataclass(frozen=True, eq=False)
class ModeProfile:
    """A function on one mode; see the module docstring for the pieces.

    ``poly`` is a finite TwoBranchSeries (times the cutoff), ``bumps`` a
    tuple of (exponents, coefficients, lo, hi) and ``poisson`` a tuple of
    (RadialSolution, coefficient).
    """

    geom: ModelGeometry
    params: GammaParams
    poly: TwoBranchSeries | None = None
    bumps: tuple = ()
    poisson: tuple = ()
    cut: tuple = None
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.cut is None:
            object.__setattr__(self, "cut", default_cutoff(self.geom))
        a, b = self.cut
        for _, _, lo, hi in self.bumps:
            if lo < a - 1e-14 or hi <= lo:
                raise ConfigError("bumps must sit in [a, inf) away from the boundary")

    @property
    def K(self):
        return 2 * self.params.k + 2

    def _combine(self, other, sign):
        if other.geom != self.geom or other.params != self.params:
            raise ConfigError("profiles live on different modes")
        if tuple(other.cut) != tuple(self.cut) and other.poly is not None and self.poly is not None:
            raise ConfigError("polynomial parts use different cutoffs")
        cut = self.cut if self.poly is not None else other.cut
        poly = self.poly
        if other.poly is not None:
            q = other.poly.scale(sign)
            poly = q if poly is None else poly + q
        bumps = self.bumps + tuple((e, sign * np.asarray(c), lo, hi) for e, c, lo, hi in other.bumps)
        poisson = self.poisson + tuple((s, sign * c) for s, c in other.poisson)
        return ModeProfile(self.geom, self.params, poly, bumps, poisson, cut)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def scale(self, c):
        poly = None if self.poly is None else self.poly.scale(c)
        return ModeProfile(self.geom, self.params, poly,
                           tuple((e, c * np.asarray(k), lo, hi) for e, k, lo, hi in self.bumps),
                           tuple((s, c * k) for s, k in self.poisson), self.cut)

    def support(self):
        """Interval outside which the non-Poisson part vanishes, or None."""
        ends = [(lo, hi) for _, _, lo, hi in self.bumps]
        if self.poly is not None:
            ends.append((0.0, self.cut[1]))
        if not ends:
            return None
        return min(e[0] for e in ends), max(e[1] for e in ends)

    @property
    def is_solution(self):
        return self.poly is None and not self.bumps

    # -- pointwise

    def _poly_powers(self):
        if self.poly is None:
            return np.zeros(0), np.zeros(0)
        e = np.concatenate([self.poly.even.exponents(), self.poly.shifted.exponents()])
        c = np.concatenate([self.poly.even.coeffs, self.poly.shifted.coeffs])
        keep = c != 0
        return e[keep], c[keep]

    def nonpoisson_jet(self, x0, N):
        x0 = np.asarray(x0, dtype=float)
        out = np.zeros((x0.size, N + 1))
        if self.poly is not None:
            e, c = self._poly_powers()
            out += _jmul(_powersum_jet(x0, e, c, N), _cutoff_jet(x0, *self.cut, self.K, N))
        for e, c, lo, hi in self.bumps:
            out += _jmul(_powersum_jet(x0, e, c, N), _bump_jet(x0, lo, hi, self.K, N))
        return out

    def values(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.nonpoisson_jet(x, 0)[:, 0]
        g = self.params.gamma - self.geom.n / 2
        for sol, c in self.poisson:
            out = out + c * x ** g * sol.value(x)
        return out

    def L_values(self, x):
        """L_2k U at interior points (only the non-Poisson part contributes)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        N = 2 * self.params.k
        shift = self.geom.n / 2 - self.params.gamma
        W = _jmul(_power_jet(x, shift, N), self.nonpoisson_jet(x, N))
        return _apply_L_jets(W, x, self.geom, self.params) * x ** (-shift - N)

    # -- near the boundary

    def poly_series(self, order=ORDER):
        if self.poly is None:
            return TwoBranchSeries.zeros(self.params, order)
        pad = lambda s: np.pad(s.coeffs, (0, max(0, order + 1 - s.coeffs.size)))[: order + 1]
        return TwoBranchSeries(self.params, pad(self.poly.even), pad(self.poly.shifted))

    def series(self, order=ORDER):
        """Two-branch expansion at the boundary (valid on [0, a])."""
        out = self.poly_series(order)
        for sol, c in self.poisson:
            out = out + sol.boundary_series(self.params).truncate(order).scale(c)
        return out

    def boundary_values(self):
        """(B_2j U, B_{2j+2[gamma]} U) for j = 0..floor(gamma)."""
        if "bv" not in self._cache:
            if self.poly is None and not self.poisson:
                z = np.zeros(self.params.k)
                self._cache["bv"] = (z, z.copy())
            elif self.geom.kind == "ball_literal":
                order = 2 * self.params.floor_g + 8
                self._cache["bv"] = all_boundary_values(self.series(order), self.geom)
            else:
                self._cache["bv"] = _apply_boundary_map(self.series(2 * self.params.floor_g), self.geom)
        return self._cache["bv"]

    def data(self):
        """The Dirichlet data of the extension problem carried by U."""
        ev, sh = self.boundary_values()
        p = self.params
        return BoundaryData(ev[: p.half_floor + 1].copy(),
                            sh[: p.floor_g - p.half_floor].copy())


def bump(geom, params, lo, hi, coefs, exps=None):
    """Interior bump profile sum c_i rho^{e_i} times a smooth window on [lo, hi].

    The default exponents start at 2 floor(gamma) + 2.
    """
    coefs = np.atleast_1d(np.asarray(coefs, dtype=float))
    if exps is None:
        exps = 2 * params.floor_g + 2 + np.arange(coefs.size)
    return ModeProfile(geom, params, bumps=((np.asarray(exps, float), coefs, lo, hi),))


# ---------------------------------------------------------------------------
# the Dirichlet problem


@dataclass(frozen=True)
class BoundaryData:
    """f^(2j), j <= floor(gamma/2), and phi^(2j), j < floor(gamma) - floor(gamma/2)."""

    f: np.ndarray
    phi: np.ndarray

    def check(self, params):
        nf, nphi = params.half_floor + 1, params.floor_g - params.half_floor
        if len(self.f) != nf or len(self.phi) != nphi:
            raise ConfigError(f"expected {nf} values of f and {nphi} of phi")
        if not (np.all(np.isfinite(self.f)) and np.all(np.isfinite(self.phi))):
            raise ConfigError("boundary data must be finite")
        return self

    @classmethod
    def zeros(cls, params):
        return cls(np.zeros(params.half_floor + 1), np.zeros(params.floor_g - params.half_floor))

    @classmethod
    def random(cls, params, rng):
        return cls(rng.standard_normal(params.half_floor + 1),
                   rng.standard_normal(params.floor_g - params.half_floor))


@dataclass(frozen=True, eq=False)
class ModeSolution:
    """Sum of Poisson pieces solving L_2k V = 0 with given data."""

    summands: tuple        # (mu, RadialSolution, coefficient)
    series: TwoBranchSeries
    profile: ModeProfile
    boundary_residual: float


def _orders(params):
    fl, fr = params.floor_g, params.frac_g
    mus_f = [params.gamma - 2 * j for j in range(params.half_floor + 1)]
    mus_phi = [fl - fr - 2 * j for j in range(fl - params.half_floor)]
    return mus_f, mus_phi


def solve_dirichlet(geom, params, data, order=None):
    """Solve L_2k V = 0 with B_2j V = f^(2j) and B_{2j+2[gamma]} V = phi^(2j).

    V is the sum of rho^{-n/2+gamma} P(n/2+mu) applied to the data, with
    mu = gamma - 2j for f^(2j) and floor(gamma) - [gamma] - 2j for
    phi^(2j). The boundary conditions are checked on the assembled series.
    """
    data.check(params)
    n = geom.n
    mus_f, mus_phi = _orders(params)
    summands = []
    for mu, c in list(zip(mus_f, data.f)) + list(zip(mus_phi, data.phi)):
        sol = poisson_mode(geom, n / 2 + mu) if order is None else poisson_mode(geom, n / 2 + mu, order)
        summands.append((mu, sol, float(c)))
    prof = ModeProfile(geom, params, poisson=tuple((s, c) for _, s, c in summands if c != 0))
    series = prof.series()
    if prof.poisson:
        ev, sh = prof.boundary_values()
        got = np.concatenate([ev[: len(data.f)], sh[: len(data.phi)]])
        want = np.concatenate([data.f, data.phi])
        res = float(np.max(np.abs(got - want)) / max(1.0, np.max(np.abs(want))))
    else:
        res = 0.0
    if res > 1e-6:
        raise TruncationError(f"boundary conditions reproduced only to {res:.2e}")
    return ModeSolution(tuple(summands), series, prof, res)


def _P(geom, mu, normalisation):
    if normalisation == "multiplier":
        return gjms_multiplier(geom, mu)
    return fractional_operator_eigenvalue(geom, mu)


def _rel(a, b):
    s = max(abs(a), abs(b))
    return 0.0 if s == 0 else abs(a - b) / s


def extension_terms(geom, params, data, normalisation="scattering", order=None):
    """Both identity families for the solution with ``data``, as (family, j, lhs, rhs).

    Family "f": B_{2gamma-2j} V against c_{gamma,j} P_{gamma-2j} B_2j V for
    j <= floor(gamma/2). Family "phi": B_{2floor(gamma)-2j} V against
    d_{gamma,j} P_{floor(gamma)-[gamma]-2j} B_{2j+2[gamma]} V. P is c_mu S
    (``"scattering"``) or the Gamma-ratio multiplier (``"multiplier"``).
    """
    sol = solve_dirichlet(geom, params, data, order)
    ev, sh = sol.profile.boundary_values()
    fl = params.floor_g
    mus_f, mus_phi = _orders(params)
    out = []
    for j, mu in enumerate(mus_f):
        c = ladder_constants(params, j)[3]
        out.append(("f", j, sh[fl - j], c * _P(geom, mu, normalisation) * ev[j]))
    for j, nu in enumerate(mus_phi):
        d = ladder_constants(params, j)[4]
        out.append(("phi", j, ev[fl - j], d * _P(geom, nu, normalisation) * sh[j]))
    return out


def extension_residual(geom, params, data, normalisation="scattering", order=None):
    """Relative residuals of both identity families (see ``extension_terms``)."""
    return np.array([_rel(a, b) for _, _, a, b in
                     extension_terms(geom, params, data, normalisation, order)])


# ---------------------------------------------------------------------------
# integrals


def _weight_series(geom, params, order):
    x = TruncatedSeries(np.eye(1, order + 1, 1)[0])
    return geom.volume_weight(x).shift(1 - 2 * params.frac_g)


def _integrate_series(s, a, where):
    ex = s.exponents()
    c = s.coeffs
    scale = float(np.abs(c).max()) if c.size else 0.0
    bad = ex <= -1 + 1e-12
    if np.any(np.abs(c[bad]) > TOL["vanishing"] * max(scale, 1e-300)):
        raise NonintegrableError(f"{where}: endpoint exponent <= -1")
    ok = ~bad
    return float(np.sum(c[ok] * a ** (ex[ok] + 1) / (ex[ok] + 1)))


def _support_points(profiles, a):
    """Breakpoints on [a, top] where top is the outer edge of any L-support."""
    pts, top = {a}, a
    for prof in profiles:
        if prof.poly is not None:
            pts.update(prof.cut)
            top = max(top, prof.cut[1])
        for _, _, lo, hi in prof.bumps:
            pts.update((lo, hi))
            top = max(top, hi)
    return np.array(sorted(p for p in pts if a <= p <= top))


def _composite_nodes(pts):
    """Gauss-Legendre nodes and weights on each panel between breakpoints."""
    t, wt = leggauss(NODES)
    xs, ws = [], []
    # about PANELS panels per third of the span, at least two per interval
    ref = (pts[-1] - pts[0]) / 3 if len(pts) > 1 else 1.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        panels = max(2, int(math.ceil(PANELS * (hi - lo) / ref - 1e-9)))
        edges = np.linspace(lo, hi, panels + 1)
        for p, q in zip(edges[:-1], edges[1:]):
            xs.append(0.5 * (q - p) * t + 0.5 * (q + p))
            ws.append(0.5 * (q - p) * wt)
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def _bulk_matrix(Us, Vs):
    """Matrix of int U_i L V_j rho^{1-2[gamma]} dvol."""
    geom, params = Vs[0].geom, Vs[0].params
    for P in list(Us) + list(Vs):
        if P.geom != geom or P.params != params:
            raise ConfigError("profiles live on different modes")
    a = min(P.cut[0] for P in list(Us) + list(Vs))
    out = np.zeros((len(Us), len(Vs)))
    # near the boundary: exact series integration
    order = ORDER
    w = _weight_series(geom, params, order)
    Useries = None
    for j, V in enumerate(Vs):
        if V.poly is None:
            continue
        LV = apply_L2k(V.poly_series(order + 2 * params.k), geom, params)
        if Useries is None:
            Useries = [U.series(order) if U.poly is not None or U.poisson else None
                       for U in Us]
        for i, Us_i in enumerate(Useries):
            if Us_i is None:
                continue
            for up in Us_i.pieces():
                for lp in LV.pieces():
                    out[i, j] += _integrate_series(up * lp * w, a, "bulk")
    # interior: composite Gauss-Legendre between breakpoints
    x, wt = _composite_nodes(_support_points(list(Us) + list(Vs), a))
    if x.size:
        wt = wt * x ** (1 - 2 * params.frac_g) * geom.volume_weight(x)
        uv = np.array([U.values(x) for U in Us])
        lv = np.zeros((len(Vs), x.size))
        for j, V in enumerate(Vs):
            sup = V.support()
            if sup is None:
                continue
            sel = (x > sup[0]) & (x < sup[1])
            lv[j, sel] = V.L_values(x[sel])
        out += (uv * wt) @ lv.T
    return out


def bulk_pairing(U, V):
    """int_X U L_2k V rho^{1-2[gamma]} dvol per mode."""
    return float(_bulk_matrix([U], [V])[0, 0])


def trace_weights(params, variant="theorem"):
    """Arrays (sigma_j, varsigma_j), j = 0..floor(gamma).

    ``variant``: "theorem" (the printed constants), "pi" (2|gamma-2j| pi_j
    route) or "2n" (the pi route times 2^{-n}).
    """
    sig, vs = [], []
    for j in range(params.floor_g + 1):
        if variant == "theorem":
            s, v = trace_constants(params, j)
        else:
            alt = trace_constants_alternates(params, j)
            key = "pi" if variant == "pi" else "2n"
            s, v = alt["sigma_" + key], alt["varsigma_" + key]
        sig.append(s)
        vs.append(v)
    return np.array(sig), np.array(vs)


def _sigma_from(bu, bv, params, variant):
    fl, h = params.floor_g, params.half_floor
    sig, _ = trace_weights(params, variant)
    (eu, su), (ev, sv) = bu, bv
    out = 0.0
    for j in range(fl + 1):
        if j <= h:
            out += sig[j] * eu[j] * sv[fl - j]
        else:
            out += sig[j] * su[fl - j] * ev[j]
    return out


def _varsigma_from(bu, bv, geom, params, variant, normalisation):
    fl, h = params.floor_g, params.half_floor
    _, vs = trace_weights(params, variant)
    (eu, su), (ev, sv) = bu, bv
    out = 0.0
    for j in range(fl + 1):
        if j <= h:
            out += vs[j] * eu[j] * _P(geom, params.gamma - 2 * j, normalisation) * ev[j]
        else:
            out += vs[j] * su[fl - j] * _P(geom, 2 * j - params.gamma, normalisation) * sv[fl - j]
    return out


def sigma_sum(U, V, variant="theorem"):
    """sum sigma_j B_2j U B_{2gamma-2j} V (j <= floor(gamma/2)) plus the swapped terms."""
    return _sigma_from(U.boundary_values(), V.boundary_values(), U.params, variant)


def varsigma_sum(U, V, variant="theorem", normalisation="scattering"):
    """sum varsigma_j B U P B V over the Dirichlet-data indices."""
    return _varsigma_from(U.boundary_values(), V.boundary_values(), U.geom, U.params,
                          variant, normalisation)


def dirichlet_form_Q(U, V, variant="theorem"):
    """Bulk pairing minus the sigma-weighted boundary products."""
    return bulk_pairing(U, V) - sigma_sum(U, V, variant)


def energy(U, variant="theorem"):
    return dirichlet_form_Q(U, U, variant)


def trace_gap(U, variant="theorem", normalisation="scattering"):
    """E(U) minus the varsigma-weighted sum of B U P B U."""
    return energy(U, variant) - varsigma_sum(U, U, variant, normalisation)


def _solution_of(U):
    return solve_dirichlet(U.geom, U.params, U.data()).profile


def main_identity_report(U, V, variants=("theorem", "pi", "2n")):
    """Relative residual of the bulk decomposition for each sigma/varsigma variant.

    LHS = int U L V; RHS = int (U - U~) L (V - V~) + sigma sums + varsigma
    sums, with U~, V~ the solutions carrying the data of U, V.
    """
    Ut, Vt = _solution_of(U), _solution_of(V)
    lhs = bulk_pairing(U, V)
    bulk = bulk_pairing(U - Ut, V - Vt)
    out = {}
    for v in variants:
        s, c = sigma_sum(U, V, v), varsigma_sum(U, V, v)
        rhs = bulk + s + c
        scale = max(abs(lhs), abs(bulk), abs(s), abs(c), 1e-300)
        out[v] = abs(lhs - rhs) / scale
    return out


def main_identity_residual(U, V, variant="theorem"):
    return main_identity_report(U, V, (variant,))[variant]


# ---------------------------------------------------------------------------
# bilinear assembly on a fixed family of profiles


class ModeBasis:
    """Profiles P_i on one mode with their bulk Gram matrix and boundary values.

    Every quantity above is bilinear (or linear) in the profiles, so for
    U = sum u_i P_i and V = sum v_i P_i the form Q, the energy, the trace
    gap and the main identity reduce to small matrix products.
    ``bulk[i, j]`` is int P_i L P_j and ``ev``, ``sh`` hold the boundary
    values B_2j P_i and B_{2j+2[gamma]} P_i row by row.
    """

    def __init__(self, profiles):
        self.profiles = tuple(profiles)
        if not self.profiles:
            raise ConfigError("empty basis")
        self.geom, self.params = self.profiles[0].geom, self.profiles[0].params
        self.bulk = _bulk_matrix(self.profiles, self.profiles)
        bv = [P.boundary_values() for P in self.profiles]
        self.ev = np.array([b[0] for b in bv])
        self.sh = np.array([b[1] for b in bv])
        self._data_map = None

    def __len__(self):
        return len(self.profiles)

    def combine(self, u):
        out = ModeProfile(self.geom, self.params)
        for c, P in zip(u, self.profiles):
            if c != 0:
                out = out + P.scale(float(c))
        return out

    def boundary(self, u):
        u = np.asarray(u, dtype=float)
        return u @ self.ev, u @ self.sh

    def Q(self, u, v, variant="theorem"):
        return float(u @ self.bulk @ v) - _sigma_from(self.boundary(u), self.boundary(v),
                                                      self.params, variant)

    def energy(self, u, variant="theorem"):
        return self.Q(u, u, variant)

    def trace_gap(self, u, variant="theorem", normalisation="scattering"):
        bu = self.boundary(u)
        return self.energy(u, variant) - _varsigma_from(bu, bu, self.geom, self.params,
                                                        variant, normalisation)

    def solution_part(self, u):
        """Coefficients of the solution carrying the data of U (needs a unit Poisson basis)."""
        if self._data_map is None:
            p = self.params
            idx = []
            for i, P in enumerate(self.profiles):
                if P.is_solution and P.poisson:
                    idx.append(i)
            if len(idx) != p.k:
                raise ConfigError("basis lacks the unit Poisson solutions")
            # unit solutions carry unit data: their data matrix is the identity
            D = np.concatenate([self.ev[idx, : p.half_floor + 1],
                                self.sh[idx, : p.floor_g - p.half_floor]], axis=1)
            self._data_map = (np.array(idx), np.linalg.inv(D))
        idx, Dinv = self._data_map
        p = self.params
        eu, su = self.boundary(u)
        data = np.concatenate([eu[: p.half_floor + 1], su[: p.floor_g - p.half_floor]])
        out = np.zeros(len(self))
        out[idx] = data @ Dinv
        return out

    def main_identity_report(self, u, v, variants=("theorem", "pi", "2n"),
                             normalisation="scattering"):
        ut, vt = self.solution_part(u), self.solution_part(v)
        lhs = float(u @ self.bulk @ v)
        bulk = float((u - ut) @ self.bulk @ (v - vt))
        bu, bv = self.boundary(u), self.boundary(v)
        out = {}
        for var in variants:
            s = _sigma_from(bu, bv, self.params, var)
            c = _varsigma_from(bu, bv, self.geom, self.params, var, normalisation)
            scale = max(abs(lhs), abs(bulk), abs(s), abs(c), 1e-300)
            out[var] = abs(lhs - (bulk + s + c)) / scale
        return out

    @classmethod
    def standard(cls, geom, params, rng, nbumps=4, rungs=None, order=None):
        """Unit Poisson solutions, cut-off ladder atoms and seeded bumps.

        Returns the basis and a dict of index arrays keyed by "poisson",
        "poly" and "bump".
        """
        p = params
        a, b = default_cutoff(geom)
        profs, kinds = [], []
        for i in range(p.k):
            e = np.zeros(p.k)
            e[i] = 1.0
            data = BoundaryData(e[: p.half_floor + 1], e[p.half_floor + 1:])
            profs.append(solve_dirichlet(geom, p, data, order).profile)
            kinds.append("poisson")
        rungs = rungs or p.k + 1
        for ladder in ("even", "shifted"):
            for m in range(rungs + 1):
                c = np.zeros(2 * rungs + 1)
                c[2 * m] = 1.0
                z = np.zeros_like(c)
                poly = TwoBranchSeries(p, c, z) if ladder == "even" else TwoBranchSeries(p, z, c)
                profs.append(ModeProfile(geom, p, poly=poly, cut=(a, b)))
                kinds.append("poly")
        for _ in range(nbumps):
            lo, hi = _random_support(rng, a, b)
            profs.append(bump(geom, p, lo, hi, rng.standard_normal(2)))
            kinds.append("bump")
        kinds = np.array(kinds)
        index = {k: np.flatnonzero(kinds == k) for k in ("poisson", "poly", "bump")}
        return cls(profs), index


def _random_support(rng, a, b):
    lo, hi = np.sort(rng.uniform(a, b, 2))
    if hi - lo < 0.1 * (b - a):
        hi = min(b, lo + 0.3 * (b - a))
        lo = min(lo, hi - 0.1 * (b - a))
    return lo, hi


# ---------------------------------------------------------------------------
# random admissible profiles and the spectral probe


def random_profile(geom, params, rng, *, poisson=True, poly=True, nbumps=1, rungs=None):
    """A random admissible profile: Poisson pieces, cut-off polynomial, bumps."""
    a, b = default_cutoff(geom)
    out = ModeProfile(geom, params)
    if poisson:
        out = out + solve_dirichlet(geom, params, BoundaryData.random(params, rng)).profile
    if poly:
        rungs = rungs or params.k + 1
        ev = np.zeros(2 * rungs + 1)
        sh = np.zeros(2 * rungs + 1)
        ev[0::2] = rng.standard_normal(rungs + 1)
        sh[0::2] = rng.standard_normal(rungs + 1)
        out = out + ModeProfile(geom, params, poly=TwoBranchSeries(params, ev, sh), cut=(a, b))
    for _ in range(nbumps):
        lo, hi = _random_support(rng, a, b)
        out = out + bump(geom, params, lo, hi, rng.standard_normal(2))
    return out


def _norm2(V):
    """int V^2 rho^{-1-2gamma} dvol per mode, over the support of V."""
    x, wt = _composite_nodes(_support_points([V], 0.0))
    f = V.values(x) ** 2 * x ** (-1 - 2 * V.params.gamma) * V.geom.volume_weight(x)
    return float(np.dot(wt, f))


def lambda1_lower_bound(params):
    """prod (gamma - 2j)^2: the bottom of the spectrum of L+ on hyperbolic space."""
    return float(np.prod([(params.gamma - 2 * j) ** 2 for j in range(params.k)]))


def lambda1_probe(geom, params, trial_count=20, seed=0):
    """Smallest Rayleigh quotient E(V)/||V||^2 over random zero-data trials.

    Trials are interior bumps; it is an upper bound for the bottom of the
    spectrum and must be positive.
    """
    if trial_count < 1:
        raise ConfigError("trial_count must be >= 1")
    rng = np.random.default_rng(seed)
    a, b = default_cutoff(geom)
    best = math.inf
    for _ in range(trial_count):
        lo = rng.uniform(a, 0.5 * (a + b))
        hi = lo + rng.uniform(0.3, 1.0) * (b - lo)
        V = bump(geom, params, lo, hi, rng.standard_normal(3))
        best = min(best, bulk_pairing(V, V) / _norm2(V))
    return best
