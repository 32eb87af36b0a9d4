"""
Closed-form constants of the boundary-operator calculus.

Each ladder constant is computed from its defining finite product (the
indicial action of the operator product on a ladder atom). Gamma closed
forms are kept next to them purely as cross-checks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError
from .numerics import gamma_ratio, rgamma_product

__all__ = [
    "GammaParams",
    "ladder_constants",
    "trace_constants",
    "spectral_constants",
    "constants_table",
    "ConstantsRow",
]


@dataclass(frozen=True)
class GammaParams:
    """Dimension n and non-integer order gamma in (0, n/2)."""

    n: int
    gamma: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ConfigError(f"n must be an integer >= 3, got {self.n!r}")
        g = float(self.gamma)
        if not 0.0 < g < self.n / 2:
            raise ConfigError(f"gamma must lie in (0, n/2) = (0, {self.n / 2:g}), got {g!r}")
        if abs(g - round(g)) < 1e-12:
            raise ConfigError(f"gamma must not be an integer, got {g!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "gamma", g)

    @property
    def floor_g(self):
        return int(math.floor(self.gamma))

    @property
    def frac_g(self):
        return self.gamma - self.floor_g

    @property
    def k(self):
        return self.floor_g + 1

    @property
    def half_floor(self):
        """floor(gamma/2): the split index between the two sums."""
        return int(math.floor(self.gamma / 2))

    def check_j(self, j):
        if int(j) != j or not 0 <= j <= self.floor_g:
            raise ConfigError(f"index j={j!r} outside 0..{self.floor_g}")
        return int(j)


# ---------------------------------------------------------------------------
# product forms


def _b_even_product(p, j):
    # (g-2j)^2 - x^2 split as (g-2j-x)(g-2j+x) so vanishing factors are exact zeros
    g, fl = p.gamma, p.floor_g
    out = 1.0
    for l in range(j):
        out *= (2 * l - 2 * j) * (2 * g - 2 * j - 2 * l)
        out *= (2 * fl - 2 * j - 2 * l) * (2 * g - 2 * j + 2 * l - 2 * fl)
    return out


def _b_shifted_product(p, j):
    g, fl = p.gamma, p.floor_g
    out = 1.0
    for l in range(j + 1):
        out *= (2 * j + 2 * l - 2 * fl) * (2 * g - 2 * fl + 2 * j - 2 * l)
    for l in range(j):
        out *= (2 * j - 2 * l) * (2 * g - 4 * fl + 2 * j + 2 * l)
    return out


def _pi_product(p, j):
    g, fl = p.gamma, p.floor_g
    out = 1.0
    for m in range(j):
        out *= (2 * j - 2 * m) * (2 * g - 2 * j - 2 * m)
    for m in range(fl - j):
        out *= (-2 - 2 * m) * (2 * g - 4 * j - 2 - 2 * m)
    return out


# ---------------------------------------------------------------------------
# Gamma forms (cross-checks)


def _b_even_gamma(p, j):
    g, fl, fr = p.gamma, p.floor_g, p.frac_g
    return 4.0 ** (2 * j) * math.factorial(j) * rgamma_product(
        [j + 1 - fr, g + 1 - j, fl + 1 - j],
        [1 - fr, g + 1 - 2 * j, fl + 1 - 2 * j])


def _b_shifted_gamma(p, j):
    fl, fr = p.floor_g, p.frac_g
    return -(4.0 ** (2 * j + 1)) * math.factorial(j) * rgamma_product(
        [j + 1 + fr, fl + 1 - j, fl + 1 - j - fr],
        [fr, fl - 2 * j, fl + 1 - 2 * j - fr])


def _pi_gamma(p, j):
    g, fl = p.gamma, p.floor_g
    # each difference of squares of even shifts carries a factor 4
    return 4.0 ** fl * rgamma_product([g - j + 1, j + 1, j + fl - g + 1, fl - j + 1],
                                      [g - 2 * j + 1, 2 * j - g + 1])


def _c_gamma_j(p, j):
    mu = p.gamma - 2 * j
    return 2.0 ** (-mu) * gamma_ratio(-mu, mu)


def _d_gamma_j(p, j):
    # 2j + [g] - floor(g) is minus the order floor(g) - [g] - 2j of its P
    nu = p.floor_g - p.frac_g - 2 * j
    return 2.0 ** (-nu) * gamma_ratio(-nu, nu)


def ladder_constants(params, j):
    """(b_2j, b_2j_shifted, pi_j, c_gamma_j, d_gamma_j) from product forms.

    b constants are the indicial values of the unnormalised operators on
    the atoms rho^{2j} and rho^{2j+2[gamma]}; pi_j is the product left
    after removing the factor that sees rho^{2j} from the full operator.
    """
    j = params.check_j(j)
    return (_b_even_product(params, j), _b_shifted_product(params, j),
            _pi_product(params, j), _c_gamma_j(params, j), _d_gamma_j(params, j))


def ladder_constants_gamma_form(params, j):
    """Same constants through their Gamma closed forms."""
    j = params.check_j(j)
    return (_b_even_gamma(params, j), _b_shifted_gamma(params, j),
            _pi_gamma(params, j), _c_gamma_j(params, j), _d_gamma_j(params, j))


def _G(p, j):
    g, fl = p.gamma, p.floor_g
    return rgamma_product([g - j + 1, j + 1, j + fl - g + 1, fl - j + 1], [])


def trace_constants(params, j):
    """(sigma_j, varsigma_j) as printed in the theorem statements."""
    j = params.check_j(j)
    g = params.gamma
    G = _G(params, j)
    if j <= params.half_floor:
        sigma = 2.0 * G * rgamma_product([], [g - 2 * j, 2 * j - g + 1])
        varsigma = 2.0 ** (2 * j - g + 1) * G * rgamma_product([], [g - 2 * j, g - 2 * j + 1])
    else:
        sigma = 2.0 * G * rgamma_product([], [g - 2 * j + 1, 2 * j - g])
        varsigma = 2.0 ** (g - 2 * j + 1) * G * rgamma_product([], [2 * j - g, 2 * j - g + 1])
    return sigma, varsigma


def trace_constants_alternates(params, j):
    """Alternate routes to sigma and varsigma through pi_j.

    Returns a dict with
      sigma_pi      2|gamma - 2j| pi_j
      varsigma_pi   c_{gamma,j} pi_j (4j - 2gamma)         (j <= floor(gamma/2))
                    d_{gamma,floor-j} pi_j (2gamma - 4j)   (otherwise)
      sigma_2n, varsigma_2n  the same with an extra factor 2^{-n}
    """
    j = params.check_j(j)
    g = params.gamma
    pi = _pi_product(params, j)
    if j <= params.half_floor:
        sigma = (2 * g - 4 * j) * pi
        varsigma = _c_gamma_j(params, j) * pi * (4 * j - 2 * g)
    else:
        sigma = (4 * j - 2 * g) * pi
        varsigma = _d_gamma_j(params, params.floor_g - j) * pi * (2 * g - 4 * j)
    s = 2.0 ** (-params.n)
    return {"sigma_pi": sigma, "varsigma_pi": varsigma,
            "sigma_2n": s * sigma, "varsigma_2n": s * varsigma}


def omega(n):
    """Surface area of the unit n-sphere S^n."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def spectral_constants(params):
    """(c_gamma, beckner_const, omega_n).

    c_gamma = 2^gamma Gamma(gamma)/Gamma(-gamma) is the prefactor in
    P_gamma = c_gamma S(n/2 + gamma). beckner_const is the Gamma ratio
    alone; the factor omega_n^{2 gamma/n} is applied by the caller.
    """
    g, n = params.gamma, params.n
    c = 2.0 ** g * gamma_ratio(g, -g)
    beck = gamma_ratio((n + 2 * g) / 2, (n - 2 * g) / 2)
    return c, beck, omega(n)


@dataclass(frozen=True)
class ConstantsRow:
    j: int
    b_2j: float
    b_2j_shifted: float
    pi_j: float
    c_gamma_j: float
    d_gamma_j: float
    sigma_j: float
    varsigma_j: float
    b_2j_gamma_form: float
    b_2j_shifted_gamma_form: float
    pi_j_gamma_form: float
    sigma_pi: float
    varsigma_pi: float
    sigma_2n: float
    varsigma_2n: float

    def residuals(self):
        """Relative product-vs-closed-form residuals (zero where both vanish)."""
        def rel(a, b):
            s = max(abs(a), abs(b))
            return 0.0 if s == 0 else abs(a - b) / s
        return {
            "b_2j": rel(self.b_2j, self.b_2j_gamma_form),
            "b_2j_shifted": rel(self.b_2j_shifted, self.b_2j_shifted_gamma_form),
            "pi_j": rel(self.pi_j, self.pi_j_gamma_form),
            "sigma_j": rel(self.sigma_j, self.sigma_pi),
            "varsigma_j": rel(self.varsigma_j, self.varsigma_pi),
        }


def constants_table(params):
    """All per-j constants plus the spectral ones, as plain data."""
    rows = []
    for j in range(params.floor_g + 1):
        b, bs, pi, c, d = ladder_constants(params, j)
        bg, bsg, pig, _, _ = ladder_constants_gamma_form(params, j)
        sigma, varsigma = trace_constants(params, j)
        alt = trace_constants_alternates(params, j)
        rows.append(ConstantsRow(j, b, bs, pi, c, d, sigma, varsigma, bg, bsg, pig,
                                 alt["sigma_pi"], alt["varsigma_pi"],
                                 alt["sigma_2n"], alt["varsigma_2n"]))
    c_g, beck, om = spectral_constants(params)
    return {"n": params.n, "gamma": params.gamma, "floor_g": params.floor_g,
            "frac_g": params.frac_g, "k": params.k, "c_gamma": c_g,
            "beckner_const": beck, "omega_n": om, "rows": rows}
