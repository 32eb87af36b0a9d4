"""
Two-branch boundary expansions and the boundary operators built from the
shifted Laplacian.

Per mode the shifted Laplacian is an Euler-type operator

    D u = A(x) x^2 u'' + B(x) x u' + C(x) u

with power-series coefficients, so it maps x^beta * (series) to
x^beta * (series) and acts on a monomial as

    D x^beta = sum_k (A_k beta(beta-1) + B_k beta + C_k) x^(beta+k).

All boundary operators are finite products of factors (D - mu^2)
sandwiched between powers of the defining function. A product is encoded
by the multiset of ladder labels l, each standing for mu = gamma - 2l.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .constants import GammaParams
from .errors import ConfigError, DivergingCoefficientError, ResonanceError
from .numerics import TOL, EpsJet, TruncatedSeries, eps_limit_quotient

__all__ = [
    "ModelGeometry",
    "EulerOperator",
    "TwoBranchSeries",
    "apply_shifted_laplacian",
    "boundary_operator",
    "reconstruct",
    "change_defining_function",
    "transformed_operator",
    "index_plan",
    "all_boundary_values",
]

KINDS = ("halfspace", "ball_geodesic", "ball_literal")


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class ModelGeometry:
    """One Fourier mode of the halfspace or one spherical-harmonic degree of the ball.

    ``mode`` is |xi| for the halfspace and the degree l for the ball. The
    ball comes with two defining functions: the geodesic one
    r = 2(1-|w|)/(1+|w|) and the literal (1-|w|^2)/2 (experimental).
    """

    kind: str
    n: int
    mode: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown geometry {self.kind!r}")
        if self.mode < 0:
            raise ConfigError("mode must be nonnegative")
        if self.kind != "halfspace" and float(self.mode) != int(self.mode):
            raise ConfigError("ball modes are integer degrees")
        object.__setattr__(self, "mode", float(self.mode))

    @property
    def is_ball(self):
        return self.kind != "halfspace"

    @property
    def geodesic(self):
        return self.kind != "ball_literal"

    @property
    def experimental(self):
        return self.kind == "ball_literal"

    @property
    def casimir(self):
        """l(l + n - 1), the eigenvalue of minus the sphere Laplacian."""
        l = self.mode
        return l * (l + self.n - 1)

    def coefficients(self, x):
        """(A, B, C) of the shifted Laplacian as series in the variable ``x``.

        ``x`` is an offset-0 TruncatedSeries representing the defining
        function: either the bare variable (boundary expansions) or
        x0 + h (local Taylor jets at interior points).
        """
        n = self.n
        one = x * 0.0 + 1.0
        x2 = x * x
        if self.kind == "halfspace":
            return one, one * (1.0 - n), n * n / 4.0 - x2 * self.mode ** 2
        if self.kind == "ball_geodesic":
            iq = (1.0 - x2 * 0.25).reciprocal()
            return (one, (1.0 - n) - (x2 * iq) * (n / 2.0),
                    n * n / 4.0 - (x2 * iq * iq) * self.casimir)
        # literal defining function rho = (1 - t^2)/2, t = |w|
        return (1.0 - x * 2.0, (1.0 - n) + x * (n - 3.0),
                n * n / 4.0 - (x2 * (1.0 - x * 2.0).reciprocal()) * self.casimir)

    def operator(self, order):
        """The shifted Laplacian as an EulerOperator truncated at ``order``."""
        return _operator(self, int(order))

    def volume_weight(self, x):
        """Density of the compactified volume in the defining function (per mode)."""
        if self.kind == "halfspace":
            return x * 0.0 + 1.0
        if self.kind == "ball_geodesic":
            q = 1.0 - x * x * 0.25
            out = x * 0.0 + 1.0
            for _ in range(self.n):
                out = out * q
            return out
        # rho = (1 - t^2)/2 is Euclidean: t^n dt = t^(n-1) d rho
        t2 = 1.0 - x * 2.0
        return t2.power((self.n - 1) / 2.0) if isinstance(t2, TruncatedSeries) \
            else t2 ** ((self.n - 1) / 2.0)

    def upper_limit(self):
        """Largest value of the defining function on the model."""
        if self.kind == "halfspace":
            return np.inf
        return 2.0 if self.kind == "ball_geodesic" else 0.5

    def label(self):
        key = "xi" if self.kind == "halfspace" else "l"
        return f"{self.kind}(n={self.n}, {key}={self.mode:g})"


@functools.lru_cache(maxsize=256)
def _operator(geom, order):
    x = TruncatedSeries(np.eye(1, order + 1, 1)[0])
    A, B, C = geom.coefficients(x)
    op = EulerOperator(A, B, C)
    # canonical leading terms of the shifted Laplacian
    assert abs(A.coeffs[0] - 1) < 1e-15 and abs(B.coeffs[0] - (1 - geom.n)) < 1e-15
    assert abs(C.coeffs[0] - geom.n ** 2 / 4) < 1e-15
    return op


class EulerOperator:
    """u -> A x^2 u'' + B x u' + C u with offset-0 series A, B, C."""

    def __init__(self, A, B, C):
        self.A, self.B, self.C = A, B, C

    @property
    def order(self):
        return min(self.A.order, self.B.order, self.C.order)

    @property
    def is_even(self):
        return all(np.all(s.coeffs[1::2] == 0) for s in (self.A, self.B, self.C))

    def indicial(self, beta):
        a, b, c = self.A.coeffs[0], self.B.coeffs[0], self.C.coeffs[0]
        return a * beta * (beta - 1.0) + b * beta + c

    def shifted(self, lam):
        """The operator minus lam."""
        return EulerOperator(self.A, self.B, self.C - lam)

    def _parts(self, u):
        if abs(u.step - 1.0) > 1e-12:
            u = u.restep(1.0)
        beta = u.exponents()
        d2 = TruncatedSeries(u.coeffs * (beta * (beta - 1.0)), u.offset)
        d1 = TruncatedSeries(u.coeffs * beta, u.offset)
        return u, d2, d1

    def apply(self, u, lam=0.0):
        """(D - lam) u, keeping min(order of u, order of D) coefficients."""
        u, d2, d1 = self._parts(u)
        out = self.A * d2 + self.B * d1 + self.C * u
        if lam:
            out = out - u.scale(lam).truncate(out.order)
        return out

    def apply_bound(self, u, lam=0.0):
        """Same as ``apply`` with every term replaced by its absolute value.

        Gives a coefficientwise bound on the size of the intermediate sums,
        used to judge whether a cancelled coefficient is really zero.
        """
        u, d2, d1 = self._parts(u)
        ab = lambda s: TruncatedSeries(np.abs(s.coeffs), s.offset, s.step)
        out = ab(self.A) * ab(d2) + ab(self.B) * ab(d1) + ab(self.C) * ab(u)
        if lam:
            out = out + ab(u).scale(abs(lam)).truncate(out.order)
        return out

    def frobenius(self, alpha, order, lam=0.0):
        """Series solution x^alpha (1 + a_1 x + ...) of (D - lam) u = 0."""
        order = min(order, self.order)
        A, B, C = self.A.coeffs, self.B.coeffs, self.C.coeffs.copy()
        C[0] -= lam
        T = lambda k, beta: A[k] * beta * (beta - 1.0) + B[k] * beta + C[k]
        a = np.zeros(order + 1)
        a[0] = 1.0
        for m in range(1, order + 1):
            den = T(0, alpha + m)
            i = np.arange(m)
            acc = float(a[:m] @ T(m - i, alpha + i))
            if den == 0.0 or abs(den) < 1e-10 * max(1.0, abs(acc)):
                if acc != 0.0:
                    raise ResonanceError(
                        f"indices differ by the integer {m}: logarithmic branch")
                continue
            a[m] = -acc / den
        return TruncatedSeries(a, alpha)


def transformed_operator(op, phi):
    """Rewrite ``op`` in a new variable xh with x = phi(xh).

    ``phi`` is a series xh*(p0 + p1 xh + ...). With a = A x^2, b = B x the
    new coefficients are a(phi)/phi'^2, b(phi)/phi' - a(phi) phi''/phi'^3
    and c(phi).
    """
    order = min(op.order, phi.order)
    ratio = TruncatedSeries(phi.coeffs[: order + 1])             # phi / xh
    d1 = phi.differentiate()                                     # offset 0
    d1 = TruncatedSeries(d1.coeffs[: order + 1])
    d2 = d1.differentiate()                                      # offset -1
    A = op.A.truncate(order).compose(phi)
    B = op.B.truncate(order).compose(phi)
    C = op.C.truncate(order).compose(phi)
    inv1 = d1.reciprocal()
    An = A * ratio * ratio * inv1 * inv1
    # xh * phi'' is an offset-0 series
    xd2 = TruncatedSeries(d2.coeffs, 0.0)
    Bn = B * ratio * inv1 - A * ratio * ratio * xd2 * inv1 * inv1 * inv1
    return EulerOperator(An, Bn, C)


# ---------------------------------------------------------------------------
# two-branch series


class TwoBranchSeries:
    """Boundary expansion sum f_m rho^m + rho^{2[gamma]} sum psi_m rho^m.

    Coefficients are stored densely in unit steps of rho, so f_{2m} sits at
    index 2m. For geodesic geometries the odd slots stay zero.
    """

    __slots__ = ("params", "even", "shifted")

    def __init__(self, params, even, shifted):
        fr = params.frac_g
        even = even if isinstance(even, TruncatedSeries) else TruncatedSeries(even, 0.0)
        shifted = (shifted if isinstance(shifted, TruncatedSeries)
                   else TruncatedSeries(shifted, 2 * fr))
        if abs(even.offset) > 1e-12 or abs(shifted.offset - 2 * fr) > 1e-12:
            raise ConfigError("ladders must have offsets 0 and 2[gamma]")
        order = min(even.order, shifted.order)
        self.params = params
        self.even = even.truncate(order)
        self.shifted = shifted.truncate(order)

    @classmethod
    def zeros(cls, params, order):
        return cls(params, np.zeros(order + 1), np.zeros(order + 1))

    @classmethod
    def atom(cls, params, ladder, m, order, coef=1.0):
        """coef * rho^m (even) or coef * rho^{2[gamma]+m} (shifted)."""
        c = np.zeros(order + 1)
        c[m] = coef
        z = np.zeros(order + 1)
        return cls(params, c, z) if ladder == "even" else cls(params, z, c)

    @property
    def order(self):
        return self.even.order

    def __add__(self, other):
        if other == 0:
            return self
        return TwoBranchSeries(self.params, self.even + other.even,
                               self.shifted + other.shifted)

    __radd__ = __add__

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, a):
        return TwoBranchSeries(self.params, self.even.scale(a), self.shifted.scale(a))

    __mul__ = scale
    __rmul__ = scale

    def multiply(self, s):
        """Multiply both ladders by an offset-0 series."""
        return TwoBranchSeries(self.params, self.even * s, self.shifted * s)

    def truncate(self, order):
        return TwoBranchSeries(self.params, self.even.truncate(order),
                               self.shifted.truncate(order))

    def norm(self):
        return float(max(np.abs(self.even.coeffs).max(), np.abs(self.shifted.coeffs).max()))

    def ladder_coefficients(self, ladder, rungs):
        """The coefficients of rho^{2m} (or rho^{2m+2[gamma]}) for m < rungs."""
        s = self.even if ladder == "even" else self.shifted
        return np.array(s.coeffs[: 2 * rungs : 2])

    def evaluate(self, rho):
        return self.even.evaluate(rho) + self.shifted.evaluate(rho)

    def pieces(self):
        return [self.even, self.shifted]

    def __repr__(self):
        return f"TwoBranchSeries(order={self.order}, even={self.even.coeffs}, shifted={self.shifted.coeffs})"


def _as_operator(geom_or_op, order):
    if isinstance(geom_or_op, EulerOperator):
        return geom_or_op
    return geom_or_op.operator(order)


def apply_shifted_laplacian(U, geom, order=None):
    """Exact coefficient action of the shifted Laplacian on a series.

    Works ladder by ladder; the operator preserves every exponent ladder,
    so no coefficients are lost beyond the common truncation order. For
    geodesic geometries an even-supported input must give an
    even-supported output, and this is asserted.
    """
    if isinstance(U, TwoBranchSeries):
        if U.order < 2:
            raise ConfigError("truncation order must be at least 2")
        op = _as_operator(geom, order or U.order)
        out = TwoBranchSeries(U.params, op.apply(U.even), op.apply(U.shifted))
        if isinstance(geom, ModelGeometry) and geom.geodesic:
            for a, b in zip(U.pieces(), out.pieces()):
                if np.all(a.coeffs[1::2] == 0):
                    assert np.all(b.coeffs[1::2] == 0), "odd coefficients populated"
        return out
    if U.order < 2:
        raise ConfigError("truncation order must be at least 2")
    op = _as_operator(geom, order or U.order)
    out = op.apply(U)
    if isinstance(geom, ModelGeometry) and geom.geodesic and np.all(U.coeffs[1::2] == 0):
        assert np.all(out.coeffs[1::2] == 0), "odd coefficients populated"
    return out


# ---------------------------------------------------------------------------
# boundary operators


@dataclass(frozen=True)
class IndexPlan:
    """How one boundary operator is assembled."""

    ladder: str              # "even" or "shifted"
    j: int
    labels: tuple            # ladder labels l of the plain factors, mu = gamma - 2l
    eps_label: int | None    # label carrying the +eps, or None
    jet: tuple               # (ladder, rungs) subtracted first, via low operators

    def exponent(self, params):
        return 2 * self.j + (2 * params.frac_g if self.ladder == "shifted" else 0.0)


def index_plan(params, ladder, j):
    """Factor multiset for B_{2j} (even) or B_{2j+2[gamma]} (shifted)."""
    j = params.check_j(j)
    fl = params.floor_g
    upper = list(range(fl - j + 1, fl + 1))
    if ladder == "even":
        base = list(range(j)) + upper
        if 2 * j <= fl:
            return IndexPlan("even", j, tuple(base), None, ())
        base.remove(j)
        return IndexPlan("even", j, tuple(base), j, ("shifted", fl - j + 1))
    if ladder != "shifted":
        raise ConfigError(f"unknown ladder {ladder!r}")
    base = list(range(j + 1)) + upper
    if 2 * j < fl:
        return IndexPlan("shifted", j, tuple(base), None, ())
    star = fl - j
    base.remove(star)
    return IndexPlan("shifted", j, tuple(base), star, ("even", fl - j + 1))


def _indicial_jet(params, plan):
    """The operator of ``plan`` on its own atom, as an eps-jet (the b-tilde)."""
    g = params.gamma
    e2 = (plan.exponent(params) - g) ** 2
    val = 1.0
    for l in plan.labels:
        val *= e2 - (g - 2 * l) ** 2
    if plan.eps_label is None:
        return EpsJet(val, 0.0)
    return EpsJet(val * (e2 - (g - 2 * plan.eps_label) ** 2), val)


def _negative_check(series, scale, where):
    ex = series.exponents()
    neg = ex < -1e-9
    if not np.any(neg):
        return
    c = np.abs(series.coeffs[..., neg])
    if c.max() > TOL["vanishing"] * scale:
        k = int(np.argmax(c))
        raise DivergingCoefficientError(
            f"{where}: coefficient of rho^{ex[neg][k]:g} does not cancel "
            f"({series.coeffs[..., neg][k]:.3e}); input outside the operator's domain")


def _low_scale(parts, back):
    """Largest bound coefficient at exponents <= 0 after the final shift."""
    m = 0.0
    for b in parts:
        ex = b.exponents() + back
        sel = ex < 1e-9
        if np.any(sel):
            m = max(m, float(np.abs(b.coeffs[..., sel]).max()))
    return m if m > 0 else 1e-300


def _run_plan(U, op, plan, ref=None):
    """Apply the factor product of ``plan`` to rho^{n/2-gamma} U; return an EpsJet.

    ``ref`` is the series before any jet subtraction; its size sets the
    scale against which cancelled coefficients are judged.
    """
    p = U.params
    g = p.gamma
    shift = p.n / 2 - g
    ref = U if ref is None else ref
    W = [s.shift(shift) for s in U.pieces()]
    Wb = [TruncatedSeries(np.maximum(np.abs(a.coeffs), np.abs(b.coeffs)), a.offset + shift)
          for a, b in zip(U.pieces(), ref.pieces())]
    if plan.eps_label is None:
        val, dval = W, None
        vb, db = Wb, None
    else:
        lam = (g - 2 * plan.eps_label) ** 2
        val = [op.apply(w, lam) for w in W]
        vb = [op.apply_bound(w, lam) for w in Wb]
        dval, db = W, Wb
    for l in plan.labels:
        lam = (g - 2 * l) ** 2
        val = [op.apply(w, lam) for w in val]
        vb = [op.apply_bound(w, lam) for w in vb]
        if dval is not None:
            dval = [op.apply(w, lam) for w in dval]
            db = [op.apply_bound(w, lam) for w in db]
    back = -shift - plan.exponent(p)
    scale = max(_low_scale(vb, back), _low_scale(db, back) if db else 0.0)
    out = []
    for part in (val, dval):
        if part is None:
            out.append(0.0)
            continue
        total = 0.0
        for s in part:
            s = s.shift(back)
            _negative_check(s, scale, f"B index {plan.exponent(p):g}")
            total += s.coefficient_of(0.0)
        out.append(float(total))
    return EpsJet(out[0], out[1])


def _boundary_value(U, op, plan, memo):
    p = U.params
    key = (plan.ladder, plan.j)
    R = U
    if plan.jet:
        ladder, rungs = plan.jet
        for i in range(rungs):
            c = _boundary_value(R, op, index_plan(p, ladder, i), None)
            R = R - TwoBranchSeries.atom(p, ladder, 2 * i, U.order, c)
    num = _run_plan(R, op, plan, U)
    den = _indicial_jet(p, plan)
    out = eps_limit_quotient(num, den)
    if memo is not None:
        memo[key] = out
    return out


def boundary_operator(U, index, geom, order=None):
    """Evaluate a boundary operator on a two-branch series.

    ``index`` is ("even", j) for B_{2j} or ("shifted", j) for
    B_{2j+2[gamma]}. ``geom`` is a ModelGeometry or an EulerOperator
    (for transformed defining functions).
    """
    ladder, j = index
    p = U.params
    if U.order < 2 * p.floor_g + 2:
        raise ConfigError(f"truncation order must be >= {2 * p.floor_g + 2}")
    op = _as_operator(geom, order or U.order)
    return _boundary_value(U, op, index_plan(p, ladder, j), None)


def all_boundary_values(U, geom, order=None):
    """Every B_{2j} and B_{2j+2[gamma]}, j = 0..floor(gamma), as two arrays."""
    p = U.params
    op = _as_operator(geom, order or U.order)
    ev = [_boundary_value(U, op, index_plan(p, "even", j), None) for j in range(p.floor_g + 1)]
    sh = [_boundary_value(U, op, index_plan(p, "shifted", j), None) for j in range(p.floor_g + 1)]
    return np.array(ev), np.array(sh)


def reconstruct(U, geom, order=None):
    """Rebuild the first floor(gamma)+1 rungs of each ladder from boundary values.

    Follows the recursion f_{2l} = B_{2l}(f - sum_{m<l} rho^{2m} f_{2m}) on
    each ladder. Returns a TwoBranchSeries holding just those rungs.
    """
    p = U.params
    op = _as_operator(geom, order or U.order)
    out = TwoBranchSeries.zeros(p, U.order)
    for ladder in ("even", "shifted"):
        R = U
        for l in range(p.floor_g + 1):
            c = _boundary_value(R, op, index_plan(p, ladder, l), None)
            atom = TwoBranchSeries.atom(p, ladder, 2 * l, U.order, c)
            R = R - atom
            out = out + atom
    return out


def change_defining_function(U, tau, allow_odd=False):
    """Re-expand U in rho_hat = exp(tau(rho)) rho.

    ``tau`` is an offset-0 series in rho; it must be even unless
    ``allow_odd`` (used internally to move between the two ball defining
    functions). Returns (U_hat, phi) where phi is the inverse map
    rho = phi(rho_hat) as a series rho_hat*(...).
    """
    if not allow_odd and np.any(tau.coeffs[1::2] != 0):
        raise ConfigError("tau must be even in rho")
    order = min(U.order, tau.order)
    fwd = tau.truncate(order).exp().shift(1.0)     # rho_hat as a series in rho
    phi = fwd.revert()                               # rho as a series in rho_hat
    ratio = TruncatedSeries(phi.coeffs)              # phi / rho_hat
    p = U.params
    even = U.even.truncate(order).compose(phi)
    sh = TruncatedSeries(U.shifted.coeffs[: order + 1]).compose(phi)
    sh = sh * ratio.power(2 * p.frac_g)
    return TwoBranchSeries(p, even, sh.shift(2 * p.frac_g)), phi
