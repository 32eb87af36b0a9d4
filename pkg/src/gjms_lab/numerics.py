"""
Numerical kernels: signed log-Gamma, Gamma ratios, truncated power series,
first-order epsilon jets and endpoint-weighted quadrature.

Everything here is plain binary64. Series are dense coefficient arrays;
a leading batch axis is allowed so that many local Taylor jets can be
pushed through the same operator at once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (
    IncompatibleLadderError,
    IndeterminateLimitError,
    NonintegrableError,
    OrderExhaustedError,
    PoleError,
)

__all__ = [
    "TOL",
    "SignedLogGamma",
    "signed_lgamma",
    "gamma_ratio",
    "rgamma_product",
    "TruncatedSeries",
    "series_ops",
    "EpsJet",
    "eps_limit_quotient",
    "gauss_jacobi",
    "quadrature",
]

# tolerance ledger
TOL = {
    "identity": 1e-6,
    "constants": 1e-12,
    "vanishing": 1e-9,
    "pole": 1e-12,
}


def _is_pole(x):
    return x <= 0 and abs(x - round(x)) < TOL["pole"]


@dataclass(frozen=True)
class SignedLogGamma:
    """log|Gamma(x)| together with the sign of Gamma(x)."""

    log_abs: float
    sign: int

    @property
    def value(self):
        return self.sign * math.exp(self.log_abs)


def signed_lgamma(x):
    """Return ``SignedLogGamma`` for real ``x`` away from the poles."""
    x = float(x)
    if _is_pole(x):
        raise PoleError(f"Gamma has a pole at {x!r}")
    return SignedLogGamma(float(special.gammaln(x)), int(special.gammasgn(x)))


def gamma_ratio(a, b):
    """Gamma(a) / Gamma(b) through a difference of log-Gammas.

    >>> gamma_ratio(5, 3)
    12.0
    """
    ga, gb = signed_lgamma(a), signed_lgamma(b)
    return ga.sign * gb.sign * math.exp(ga.log_abs - gb.log_abs)


def rgamma_product(num, den):
    """prod Gamma(num) / prod Gamma(den), where poles in ``den`` give zero.

    A pole in the denominator is the usual reading of 1/Gamma at a
    nonpositive integer. Poles in the numerator raise.
    """
    for x in den:
        if _is_pole(float(x)):
            return 0.0
    log_abs, sign = 0.0, 1
    for x in num:
        g = signed_lgamma(x)
        log_abs += g.log_abs
        sign *= g.sign
    for x in den:
        g = signed_lgamma(x)
        log_abs -= g.log_abs
        sign *= g.sign
    return sign * math.exp(log_abs)


# ---------------------------------------------------------------------------
# truncated series


def _close(a, b):
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


class TruncatedSeries:
    """sum_m c[..., m] * x**(offset + m*step), known up to m = order.

    Coefficients live on the last axis; leading axes are a batch.
    Instances are treated as immutable.
    """

    __slots__ = ("offset", "coeffs", "step")

    def __init__(self, coeffs, offset=0.0, step=1.0):
        c = np.array(coeffs, dtype=float, copy=True)
        if c.ndim == 0:
            c = c[None]
        c.setflags(write=False)
        self.coeffs = c
        self.offset = float(offset)
        self.step = float(step)

    # construction ----------------------------------------------------------

    @classmethod
    def monomial(cls, exponent, order, coef=1.0, step=1.0):
        c = np.zeros(order + 1)
        c[0] = coef
        return cls(c, exponent, step)

    @classmethod
    def zeros(cls, order, offset=0.0, step=1.0, batch=()):
        return cls(np.zeros(tuple(batch) + (order + 1,)), offset, step)

    @classmethod
    def geometric(cls, ratio, power, order):
        """Series of 1/(1 - ratio*x**power) in x, to the given order."""
        c = np.zeros(order + 1)
        c[::power] = ratio ** np.arange(len(c[::power]))
        return cls(c)

    # basic properties ------------------------------------------------------

    @property
    def order(self):
        return self.coeffs.shape[-1] - 1

    @property
    def batch_shape(self):
        return self.coeffs.shape[:-1]

    def exponents(self):
        return self.offset + self.step * np.arange(self.order + 1)

    def __repr__(self):
        return (f"TruncatedSeries(offset={self.offset:g}, step={self.step:g}, "
                f"order={self.order}, coeffs={self.coeffs!r})")

    def _like(self, coeffs, offset=None):
        return TruncatedSeries(coeffs, self.offset if offset is None else offset,
                               self.step)

    def truncate(self, order):
        if order > self.order:
            raise OrderExhaustedError(f"cannot extend order {self.order} to {order}")
        return self._like(self.coeffs[..., : order + 1])

    def pad(self, order):
        """Extend with explicit zeros (for exactly finite series only)."""
        if order <= self.order:
            return self.truncate(order)
        extra = np.zeros(self.batch_shape + (order - self.order,))
        return self._like(np.concatenate([self.coeffs, extra], axis=-1))

    def coefficient_of(self, exponent, tol=1e-9):
        """Coefficient of x**exponent, or 0 if that power is not on the grid."""
        m = (exponent - self.offset) / self.step
        mi = int(round(m))
        if abs(m - mi) > tol or mi < 0:
            return np.zeros(self.batch_shape) if self.batch_shape else 0.0
        if mi > self.order:
            raise OrderExhaustedError(
                f"exponent {exponent:g} lies beyond the truncation order")
        return self.coeffs[..., mi]

    def restep(self, step):
        """Re-index on a finer grid; ``self.step`` must be a multiple of ``step``."""
        r = self.step / step
        ri = int(round(r))
        if abs(r - ri) > 1e-12 or ri < 1:
            raise IncompatibleLadderError("step is not a refinement")
        if ri == 1:
            return self
        c = np.zeros(self.batch_shape + (self.order * ri + 1,))
        c[..., ::ri] = self.coeffs
        return TruncatedSeries(c, self.offset, step)

    # arithmetic ------------------------------------------------------------

    def _check_ladder(self, other):
        if not (_close(self.offset, other.offset) and _close(self.step, other.step)):
            raise IncompatibleLadderError(
                f"cannot add series on ladders x^({self.offset:g}+{self.step:g}m) "
                f"and x^({other.offset:g}+{other.step:g}m)")

    def __add__(self, other):
        if not isinstance(other, TruncatedSeries):
            if np.isscalar(other) and other == 0:
                return self
            if not _close(self.offset, 0.0):
                raise IncompatibleLadderError("scalars add only to offset-0 series")
            c = np.array(self.coeffs)
            c[..., 0] += other
            return self._like(c)
        self._check_ladder(other)
        order = min(self.order, other.order)
        return self._like(self.coeffs[..., : order + 1] + other.coeffs[..., : order + 1])

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, a):
        a = np.asarray(a, dtype=float)
        if a.ndim:
            a = a[..., None]
        return self._like(self.coeffs * a)

    def shift(self, p):
        """Multiply by x**p."""
        return self._like(self.coeffs, self.offset + p)

    def __mul__(self, other):
        if not isinstance(other, TruncatedSeries):
            return self.scale(other)
        if not _close(self.step, other.step):
            raise IncompatibleLadderError("cannot multiply series with different steps")
        order = min(self.order, other.order)
        a = self.coeffs[..., : order + 1]
        b = other.coeffs[..., : order + 1]
        if a.ndim == 1 and b.ndim == 1:
            c = np.convolve(a, b)[: order + 1]
        else:
            a, b = np.broadcast_arrays(a, b)
            c = np.zeros(a.shape)
            for i in range(order + 1):
                c[..., i:] += a[..., i : i + 1] * b[..., : order + 1 - i]
        return TruncatedSeries(c, self.offset + other.offset, self.step)

    __rmul__ = __mul__

    def differentiate(self):
        """d/dx, keeping the same number of coefficients."""
        return self._like(self.coeffs * self.exponents(), self.offset - 1.0)

    def reciprocal(self):
        """1/self; needs a nonzero leading coefficient."""
        a = self.coeffs
        if np.any(a[..., 0] == 0):
            raise ZeroDivisionError("leading coefficient vanishes")
        c = np.zeros(a.shape)
        c[..., 0] = 1.0 / a[..., 0]
        for m in range(1, self.order + 1):
            acc = np.sum(a[..., 1 : m + 1] * c[..., m - 1 :: -1][..., :m], axis=-1)
            c[..., m] = -acc / a[..., 0]
        return self._like(c, -self.offset)

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.reciprocal()
        return self.scale(1.0 / np.asarray(other, dtype=float))

    def _unit_check(self):
        if not _close(self.offset, 0.0):
            raise ValueError("operation needs a series with offset 0")

    def exp(self):
        """exp(self) for an offset-0 series."""
        self._unit_check()
        a = self.coeffs
        k = np.arange(self.order + 1)
        c = np.zeros(a.shape)
        c[..., 0] = np.exp(a[..., 0])
        # c' = a' c  =>  m c_m = sum_{i=1}^m i a_i c_{m-i}
        for m in range(1, self.order + 1):
            c[..., m] = np.sum(k[1 : m + 1] * a[..., 1 : m + 1]
                               * c[..., m - 1 :: -1][..., :m], axis=-1) / m
        return self._like(c)

    def log(self):
        """log(self) for an offset-0 series with positive leading term."""
        self._unit_check()
        a = self.coeffs
        if np.any(a[..., 0] <= 0):
            raise ValueError("log needs a positive leading coefficient")
        k = np.arange(self.order + 1)
        c = np.zeros(a.shape)
        c[..., 0] = np.log(a[..., 0])
        # a c' = a'  =>  m a_0 c_m = m a_m - sum_{i=1}^{m-1} (m-i) c_{m-i} a_i
        for m in range(1, self.order + 1):
            acc = np.sum(k[m - 1 : 0 : -1] * c[..., m - 1 : 0 : -1] * a[..., 1:m], axis=-1)
            c[..., m] = (m * a[..., m] - acc) / (m * a[..., 0])
        return self._like(c)

    def power(self, alpha):
        """self**alpha via exp(alpha log); leading term must be positive."""
        lead = self.coeffs[..., 0]
        unit = TruncatedSeries(self.coeffs / lead[..., None], 0.0, self.step)
        out = unit.log().scale(alpha).exp().scale(lead ** alpha)
        return TruncatedSeries(out.coeffs, alpha * self.offset, self.step)

    def compose(self, inner):
        """self(inner(x)) for offset-0 ``self`` and ``inner`` with leading exponent >= 1.

        Both series must use step 1 and ``inner`` an integer offset.
        """
        self._unit_check()
        if not (_close(self.step, 1.0) and _close(inner.step, 1.0)):
            raise IncompatibleLadderError("compose works on unit-step series")
        off = int(round(inner.offset))
        if abs(inner.offset - off) > 1e-12 or off < 0:
            raise ValueError("inner series needs a nonnegative integer offset")
        c = np.concatenate([np.zeros(inner.batch_shape + (off,)), inner.coeffs], axis=-1)
        if abs(c[..., 0]).max() != 0.0:
            raise ValueError("inner series must vanish at 0 (leading exponent >= 1)")
        order = min(self.order, c.shape[-1] - 1)
        g = TruncatedSeries(c[..., : order + 1])
        shape = np.broadcast_shapes(g.batch_shape, self.batch_shape) + (order + 1,)
        acc = np.zeros(shape)
        acc[..., 0] = self.coeffs[..., order]
        # Horner in the series ring
        for m in range(order - 1, -1, -1):
            acc = np.array((TruncatedSeries(acc) * g).coeffs)
            acc[..., 0] += self.coeffs[..., m]
        return TruncatedSeries(acc)

    def revert(self):
        """Compositional inverse of x*(a0 + a1 x + ...), a0 != 0, unit step."""
        if not (_close(self.offset, 1.0) and _close(self.step, 1.0)):
            raise ValueError("revert needs a series x*(a0 + ...)")
        a = TruncatedSeries(self.coeffs, 0.0)
        # x = y / a(x) fixed point, one correct coefficient per pass
        inv_a = a.reciprocal()
        x = TruncatedSeries.monomial(1.0, self.order, 1.0 / self.coeffs[0])
        for _ in range(self.order + 1):
            x = inv_a.compose(x).shift(1.0)
            x = TruncatedSeries(x.coeffs[: self.order + 1], 1.0)
        return x

    def evaluate(self, x):
        """Sum the series at x > 0 (broadcast against the batch shape)."""
        x = np.asarray(x, dtype=float)
        acc = np.zeros(np.broadcast_shapes(x.shape, self.batch_shape))
        for m in range(self.order, -1, -1):
            acc = acc * x ** self.step + self.coeffs[..., m]
        return acc * x ** self.offset


def series_ops(lhs, rhs=None, kind="add", *, shift=0.0, scale=1.0):
    """Single entry point for the basic series operations.

    ``kind`` is one of add, mul, compose, differentiate, scale_shift.
    """
    if kind == "add":
        return lhs + rhs
    if kind == "mul":
        return lhs * rhs
    if kind == "compose":
        return lhs.compose(rhs)
    if kind == "differentiate":
        return lhs.differentiate()
    if kind == "scale_shift":
        return lhs.scale(scale).shift(shift)
    raise ValueError(f"unknown series operation {kind!r}")


# ---------------------------------------------------------------------------
# epsilon jets


@dataclass(frozen=True)
class EpsJet:
    """a + eps*b with eps**2 = 0."""

    val: float
    dval: float = 0.0

    def __add__(self, other):
        if isinstance(other, EpsJet):
            return EpsJet(self.val + other.val, self.dval + other.dval)
        return EpsJet(self.val + other, self.dval)

    __radd__ = __add__

    def __neg__(self):
        return EpsJet(-self.val, -self.dval)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, EpsJet):
            return EpsJet(self.val * other.val,
                          self.val * other.dval + self.dval * other.val)
        return EpsJet(self.val * other, self.dval * other)

    __rmul__ = __mul__

    def at(self, eps):
        return self.val + eps * self.dval


def eps_limit_quotient(num, den, rtol=None):
    """lim_{eps -> 0} num(eps)/den(eps) for first-order jets.

    A vanishing value part is judged relative to the size of the inputs.
    """
    rtol = TOL["vanishing"] if rtol is None else rtol
    scale = max(abs(num.val), abs(num.dval), abs(den.val), abs(den.dval), 1e-300)
    den_zero = abs(den.val) <= rtol * scale
    if not den_zero:
        return num.val / den.val
    if abs(num.val) > rtol * scale:
        raise IndeterminateLimitError("denominator vanishes but numerator does not")
    if den.dval == 0:
        raise IndeterminateLimitError("denominator vanishes to second order")
    return num.dval / den.dval


# ---------------------------------------------------------------------------
# quadrature


def gauss_jacobi(npts, a, b, alpha=0.0, beta=0.0):
    """Nodes and weights for int_a^b f(x) (x-a)^alpha (b-x)^beta dx."""
    if alpha <= -1 or beta <= -1:
        raise NonintegrableError(f"endpoint exponents {alpha}, {beta} are not integrable")
    if alpha == 0 and beta == 0:
        t, w = special.roots_legendre(npts)
    else:
        # scipy's weight is (1-t)^alpha (1+t)^beta on [-1, 1]
        t, w = special.roots_jacobi(npts, beta, alpha)
    half = 0.5 * (b - a)
    x = a + half * (t + 1.0)
    return x, w * half ** (1.0 + alpha + beta)


def quadrature(f, interval, endpoint_exponents=(0.0, 0.0), *, rtol=1e-13,
               n0=16, nmax=2048):
    """int_a^b f(x) (x-a)^alpha (b-x)^beta dx by Gauss-Jacobi doubling.

    Returns (value, err) where err is the difference between the last two
    rules. ``f`` must accept an array of nodes.
    """
    a, b = map(float, interval)
    alpha, beta = map(float, endpoint_exponents)
    if alpha <= -1 or beta <= -1:
        raise NonintegrableError(f"endpoint exponents {alpha}, {beta} are not integrable")
    npts = n0
    x, w = gauss_jacobi(npts, a, b, alpha, beta)
    prev = float(np.dot(w, f(x)))
    while True:
        npts *= 2
        x, w = gauss_jacobi(npts, a, b, alpha, beta)
        cur = float(np.dot(w, f(x)))
        err = abs(cur - prev)
        if err <= rtol * max(abs(cur), 1e-300) or npts >= nmax:
            return cur, err
        prev = cur
