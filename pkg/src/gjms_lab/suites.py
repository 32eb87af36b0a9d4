"""
Verification suites: each runs over a (gamma, mode) grid and yields Check
records. A record with ``passed`` None is informational (an alternative
normalisation or a probe) and never affects the exit status.
"""
from __future__ import annotations

import math
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boundary import ModelGeometry
from .constants import GammaParams, constants_table, ladder_constants, spectral_constants
from .energy import (BoundaryData, ModeBasis, extension_terms, lambda1_lower_bound,
                     lambda1_probe)
from .errors import ConfigError, GJMSError
from .extension import (fractional_operator_eigenvalue, gjms_multiplier, neumann_constant,
                        scattering_closed_form, scattering_eigenvalue)
from .sobolev import (ZonalFunction, ball_trace_rhs, beckner_constant, beckner_ratio,
                      extremal_zonal, zonal_extension_energy)
from .transforms import (QuadraticTest, covariance_check_B0, isometry_check,
                         jacobian_identities, mobius, mobius_inverse, p_covariance_check,
                         sample_points)

__all__ = ["Check", "RunConfig", "Session", "SUITES", "run_suite", "constants_checks",
           "parse_gamma", "auto_n"]

DEFAULT_GAMMAS = (0.4, 0.75, 1.3, 2.25)
DEFAULT_XIS = (0.5, 1.0, 2.0)
GEOMETRIES = {"halfspace": "halfspace", "ball": "ball_geodesic", "ball-literal": "ball_literal"}

# default tolerance of each check family
TOLS = {
    "constants": 1e-12,
    "neumann": 1e-8,
    "scattering": 1e-7,
    "extension": 1e-6,
    "symmetry": 1e-6,
    "trace": 1e-6,
    "identity": 1e-6,
    "beckner.extremal": 1e-6,
    "beckner.random": 1e-8,
    "beckner.sharp": 1e-13,
    "transforms.exact": 1e-12,
    "transforms.fd": 1e-6,
    "lambda1": 0.0,
}

SYMMETRY_PAIRS = 50
IDENTITY_PAIRS = 10
TRACE_BUMPS = 20
BECKNER_RANDOM = 30
LAMBDA1_TRIALS = 20
TRANSFORM_POINTS = 50


def _clean(x):
    if x is None:
        return None
    x = float(x) + 0.0      # no negative zeros in the output
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    geometry: str
    n: int
    gamma: float | None
    mode: float | None
    j: int | None
    lhs: float | None
    rhs: float | None
    residual: float | None
    tol: float | None
    passed: bool | None
    note: str = ""

    @property
    def check_id(self):
        parts = [f"{self.suite}.{self.name}", self.geometry, f"n={self.n}"]
        if self.gamma is not None:
            parts.append(f"g={self.gamma:g}")
        if self.mode is not None:
            parts.append(f"mode={self.mode:g}")
        if self.j is not None:
            parts.append(f"j={self.j}")
        return "/".join(parts)

    def as_dict(self):
        return {
            "suite": self.suite, "check_id": self.check_id, "geometry": self.geometry,
            "n": int(self.n), "gamma": _clean(self.gamma),
            "j": None if self.j is None else int(self.j), "mode": _clean(self.mode),
            "lhs": _clean(self.lhs), "rhs": _clean(self.rhs),
            "residual": _clean(self.residual), "tol": self.tol,
            "pass": None if self.passed is None else bool(self.passed),
            "provenance_note": self.note,
        }


def auto_n(gamma):
    """Smallest admissible dimension for gamma: n >= 3 with gamma < n/2."""
    return max(3, int(math.floor(2 * gamma)) + 1)


def parse_gamma(spec):
    """'0.6' or 'a:b:step' (inclusive of b up to rounding)."""
    try:
        if ":" in spec:
            a, b, step = (float(t) for t in spec.split(":"))
            if step <= 0 or b < a:
                raise ConfigError(f"bad gamma range {spec!r}")
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            vals = tuple(round(a + i * step, 12) for i in range(count))
        else:
            vals = (float(spec),)
    except ValueError as exc:
        raise ConfigError(f"cannot parse gamma {spec!r}") from exc
    return vals


@dataclass(frozen=True)
class RunConfig:
    geometry: str = "ball"
    n: int | None = None
    gammas: tuple = DEFAULT_GAMMAS
    lmax: int = 6
    xis: tuple = DEFAULT_XIS
    tol: float | None = None
    seed: int = 42
    order: int | None = None
    experimental: bool = False

    def validate(self):
        if self.geometry not in GEOMETRIES:
            raise ConfigError(f"unknown geometry {self.geometry!r}")
        if self.geometry == "ball-literal" and not self.experimental:
            raise ConfigError("ball-literal needs --experimental")
        if not self.gammas:
            raise ConfigError("empty gamma grid")
        for g in self.gammas:
            if abs(g - round(g)) < 1e-3:
                raise ConfigError(f"gamma {g:g} is within 1e-3 of an integer")
        for p in self.params():
            if self.order is not None and self.order < 2 * p.floor_g + 8:
                raise ConfigError(f"--order must be >= {2 * p.floor_g + 8} for gamma {p.gamma:g}")
        if self.lmax < 0:
            raise ConfigError("--lmax must be >= 0")
        if any(x < 0 for x in self.xis):
            raise ConfigError("--xi values must be >= 0")
        if self.tol is not None and not self.tol > 0:
            raise ConfigError("--tol must be positive")
        return self

    def params(self):
        return [GammaParams(self.n or auto_n(g), g) for g in self.gammas]

    def modes(self, geometry=None):
        kind = GEOMETRIES[geometry or self.geometry]
        if kind == "halfspace":
            return tuple(float(x) for x in self.xis)
        return tuple(range(self.lmax + 1))

    def geom(self, p, mode, geometry=None):
        return ModelGeometry(GEOMETRIES[geometry or self.geometry], p.n, mode)

    def tol_for(self, family):
        return TOLS[family] if self.tol is None else self.tol


def _rng(seed, *key):
    """Generator keyed by the seed and a readable task label."""
    return np.random.default_rng([seed, zlib.crc32(repr(key).encode())])


def _rel(a, b):
    s = max(abs(a), abs(b))
    return 0.0 if s == 0 else abs(a - b) / s


def _status(residual, tol):
    return bool(residual is not None and math.isfinite(residual) and residual <= tol)


@dataclass
class Session:
    """Shared state of one run: config plus the per-mode bases."""

    cfg: RunConfig
    _bases: dict = field(default_factory=dict)

    def basis(self, geom, p):
        key = (geom, p)
        if key not in self._bases:
            rng = _rng(self.cfg.seed, "basis", geom.kind, geom.n, geom.mode, p.gamma)
            self._bases[key] = ModeBasis.standard(geom, p, rng, nbumps=TRACE_BUMPS,
                                                  order=self.cfg.order)
        return self._bases[key]


def _threads():
    try:
        return max(1, int(os.environ.get("GJMS_LAB_THREADS", "1")))
    except ValueError:
        return 1


def _grid_map(fn, tasks):
    """Run fn over tasks, at most GJMS_LAB_THREADS at a time; order preserved."""
    if _threads() == 1 or len(tasks) < 2:
        return [fn(*t) for t in tasks]
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        return list(ex.map(lambda t: fn(*t), tasks))


def _failure(suite, name, geometry, p, mode, exc):
    return Check(suite, name, geometry, p.n, p.gamma, mode, None, None, None, None, None,
                 False, f"{type(exc).__name__}: {exc}")


# ---------------------------------------------------------------------------
# constants


def constants_checks(cfg):
    out = []
    tol = cfg.tol_for("constants")
    for p in cfg.params():
        table = constants_table(p)
        for row in table["rows"]:
            j = row.j
            res = row.residuals()
            for key, lhs, rhs in (("b_2j", row.b_2j, row.b_2j_gamma_form),
                                  ("b_2j_shifted", row.b_2j_shifted, row.b_2j_shifted_gamma_form),
                                  ("pi_j", row.pi_j, row.pi_j_gamma_form)):
                out.append(Check("constants", key, "any", p.n, p.gamma, None, j, lhs, rhs,
                                 res[key], tol, _status(res[key], tol),
                                 "product form against the Gamma form with 4-power prefactor"))
            four = 4.0 ** p.floor_g
            out.append(Check("constants", "sigma_j", "any", p.n, p.gamma, None, j,
                             row.sigma_j, row.sigma_pi, res["sigma_j"], tol,
                             _status(res["sigma_j"], tol),
                             f"printed Gamma form vs 2|gamma-2j| pi_j; ratio 4^floor(gamma)"
                             f" = {four:g} expected"))
            out.append(Check("constants", "varsigma_j", "any", p.n, p.gamma, None, j,
                             row.varsigma_j, row.varsigma_pi, res["varsigma_j"], tol,
                             _status(res["varsigma_j"], tol),
                             "printed Gamma form vs c/d-product form"))
            r4 = _rel(four * row.sigma_j, row.sigma_pi)
            out.append(Check("constants", "sigma_j_times_4pow", "any", p.n, p.gamma, None, j,
                             four * row.sigma_j, row.sigma_pi, r4, tol, None,
                             "4^floor(gamma) times printed sigma against the pi form"))
            r4v = _rel(four * row.varsigma_j, row.varsigma_pi)
            out.append(Check("constants", "varsigma_j_times_4pow", "any", p.n, p.gamma, None, j,
                             four * row.varsigma_j, row.varsigma_pi, r4v, tol, None,
                             "4^floor(gamma) times printed varsigma against the pi form"))
            out.append(Check("constants", "varsigma_positive", "any", p.n, p.gamma, None, j,
                             row.varsigma_j, 0.0, max(0.0, -row.varsigma_j), 0.0,
                             row.varsigma_j > 0, "varsigma_j > 0"))
            # vanishing ranges
            if 0.5 * (1 + p.floor_g) <= j <= p.floor_g:
                out.append(Check("constants", "b_2j_vanishes", "any", p.n, p.gamma, None, j,
                                 row.b_2j, 0.0, abs(row.b_2j), tol, abs(row.b_2j) <= tol,
                                 "b_2j = 0 on its vanishing range"))
            if 0.5 * p.floor_g <= j <= p.floor_g:
                out.append(Check("constants", "b_2j_shifted_vanishes", "any", p.n, p.gamma, None,
                                 j, row.b_2j_shifted, 0.0, abs(row.b_2j_shifted), tol,
                                 abs(row.b_2j_shifted) <= tol,
                                 "shifted b vanishes on its range"))
    return out


# ---------------------------------------------------------------------------
# suites


def _extension(sess, p, mode):
    cfg = sess.cfg
    geom = cfg.geom(p, mode)
    tol = cfg.tol_for("extension")
    rng = _rng(cfg.seed, "extension", geom.kind, p.n, p.gamma, mode)
    data = BoundaryData.random(p, rng)
    try:
        terms = extension_terms(geom, p, data, "scattering", cfg.order)
        alt = extension_terms(geom, p, data, "multiplier", cfg.order)
    except GJMSError as exc:
        return [_failure("extension", "solve", cfg.geometry, p, mode, exc)]
    out = []
    for (fam, j, lhs, rhs), (_, _, _, rhs_m) in zip(terms, alt):
        r = _rel(lhs, rhs)
        out.append(Check("extension", fam, cfg.geometry, p.n, p.gamma, mode, j, lhs, rhs, r,
                         tol, _status(r, tol), "P = c_mu S(n/2+mu)"))
        out.append(Check("extension", f"{fam}_multiplier", cfg.geometry, p.n, p.gamma, mode, j,
                         lhs, rhs_m, _rel(lhs, rhs_m), tol, None,
                         "P taken as the plain Gamma-ratio multiplier (off by 2^-mu)"))
    return out


def _scattering(sess, p, mode):
    cfg = sess.cfg
    geom = cfg.geom(p, mode)
    g, n = p.gamma, p.n
    out = []
    try:
        S = scattering_eigenvalue(geom, n / 2 + g)
    except GJMSError as exc:
        return [_failure("scattering", "solve", cfg.geometry, p, mode, exc)]
    tol = cfg.tol_for("scattering")
    closed = scattering_closed_form(geom, g)
    r = _rel(S, closed) if closed != 0 or S != 0 else 0.0
    out.append(Check("scattering", "closed_form", cfg.geometry, n, g, mode, None, S, closed, r,
                     tol, _status(r, tol), "S against 2^-2g Gamma(-g)/Gamma(g) times the symbol"))
    c_g = spectral_constants(p)[0]
    mult = gjms_multiplier(geom, g)
    if geom.kind != "halfspace" or mode != 0:
        r = _rel(c_g * S, mult)
        out.append(Check("scattering", "c_gamma_S", cfg.geometry, n, g, mode, None, c_g * S, mult,
                         r, tol, _status(r, tol),
                         "c_gamma S against the Gamma-ratio symbol; ratio is 2^-gamma"))
        fo = fractional_operator_eigenvalue(geom, g)
        r = _rel(c_g * S, fo)
        out.append(Check("scattering", "c_gamma_S_scaled", cfg.geometry, n, g, mode, None,
                         c_g * S, fo, r, tol, _status(r, tol),
                         "c_gamma S against 2^-gamma times the symbol"))
    if geom.kind == "halfspace" and 0 < g < 1 and mode > 0:
        tn = cfg.tol_for("neumann")
        nc = neumann_constant(geom, p)
        r = _rel(nc, mult)
        out.append(Check("scattering", "neumann", cfg.geometry, n, g, mode, None, nc, mult, r,
                         tn, _status(r, tn), "weighted Neumann limit against |xi|^2g"))
    return out


def _symmetry(sess, p, mode):
    cfg = sess.cfg
    geom = cfg.geom(p, mode)
    try:
        B, _ = sess.basis(geom, p)
    except GJMSError as exc:
        return [_failure("symmetry", "basis", cfg.geometry, p, mode, exc)]
    rng = _rng(cfg.seed, "symmetry", geom.kind, p.n, p.gamma, mode)
    pairs = [(rng.standard_normal(len(B)), rng.standard_normal(len(B)))
             for _ in range(SYMMETRY_PAIRS)]
    tol = cfg.tol_for("symmetry")
    out = []
    for variant, judged in (("theorem", True), ("pi", False), ("2n", False)):
        worst = (-1.0, 0.0, 0.0)
        for u, v in pairs:
            a, b = B.Q(u, v, variant), B.Q(v, u, variant)
            r = abs(a - b) / max(abs(a), 1.0)
            if r > worst[0]:
                worst = (r, a, b)
        r, a, b = worst
        note = {"theorem": "printed sigma; worst of %d pairs" % SYMMETRY_PAIRS,
                "pi": "sigma = 2|gamma-2j| pi_j",
                "2n": "sigma with an extra 2^-n"}[variant]
        out.append(Check("symmetry", variant, cfg.geometry, p.n, p.gamma, mode, None, a, b, r,
                         tol, _status(r, tol) if judged else None, note))
    return out


def _trace(sess, p, mode):
    cfg = sess.cfg
    geom = cfg.geom(p, mode)
    try:
        B, idx = sess.basis(geom, p)
    except GJMSError as exc:
        return [_failure("trace", "basis", cfg.geometry, p, mode, exc)]
    rng = _rng(cfg.seed, "trace", geom.kind, p.n, p.gamma, mode)
    tol = cfg.tol_for("trace")
    u = np.zeros(len(B))
    u[idx["poisson"]] = rng.standard_normal(len(idx["poisson"]))
    E = B.energy(u)
    gap = B.trace_gap(u)
    r = abs(gap) / abs(E) if E != 0 else abs(gap)
    out = [Check("trace", "equality", cfg.geometry, p.n, p.gamma, mode, None, E, E - gap, r, tol,
                 _status(r, tol), "E(U~) against the varsigma sum")]
    gaps, adds = [], []
    for i in idx["bump"]:
        e = np.zeros(len(B))
        e[i] = 1.0
        gaps.append(B.trace_gap(u + e))
        lhs = B.energy(u + e)
        rhs = E + B.bulk[i, i]
        adds.append((_rel(lhs, rhs) if max(abs(lhs), abs(rhs)) > 1 else abs(lhs - rhs),
                     lhs, rhs))
    m = min(gaps)
    out.append(Check("trace", "strict", cfg.geometry, p.n, p.gamma, mode, None, m, 0.0,
                     max(0.0, -m), 0.0, m > 0, f"least gap over {len(gaps)} bumps"))
    r, lhs, rhs = max(adds)
    out.append(Check("trace", "additivity", cfg.geometry, p.n, p.gamma, mode, None, lhs, rhs, r,
                     tol, _status(r, tol), "E(U~+eta) against E(U~) + bulk(eta, eta)"))
    return out


def _identity(sess, p, mode):
    cfg = sess.cfg
    geom = cfg.geom(p, mode)
    try:
        B, _ = sess.basis(geom, p)
    except GJMSError as exc:
        return [_failure("identity", "basis", cfg.geometry, p, mode, exc)]
    rng = _rng(cfg.seed, "identity", geom.kind, p.n, p.gamma, mode)
    tol = cfg.tol_for("identity")
    worst = {"theorem": 0.0, "pi": 0.0, "2n": 0.0}
    for _ in range(IDENTITY_PAIRS):
        u, v = rng.standard_normal(len(B)), rng.standard_normal(len(B))
        rep = B.main_identity_report(u, v)
        for k in worst:
            worst[k] = max(worst[k], rep[k])
    notes = {"theorem": "printed sigma and varsigma",
             "pi": "pi-product sigma and varsigma",
             "2n": "pi-product forms times 2^-n"}
    return [Check("identity", k, cfg.geometry, p.n, p.gamma, mode, None, None, None, worst[k],
                  tol, _status(worst[k], tol) if k == "theorem" else None, notes[k])
            for k in ("theorem", "pi", "2n")]


def _lambda1(sess, p, mode):
    cfg = sess.cfg
    geom = cfg.geom(p, mode)
    seed = int(_rng(cfg.seed, "lambda1", geom.kind, p.n, p.gamma, mode).integers(2 ** 31))
    try:
        m = lambda1_probe(geom, p, LAMBDA1_TRIALS, seed)
    except GJMSError as exc:
        return [_failure("lambda1", "probe", cfg.geometry, p, mode, exc)]
    lb = lambda1_lower_bound(p)
    return [Check("lambda1", "rayleigh_min", cfg.geometry, p.n, p.gamma, mode, None, m, 0.0,
                  max(0.0, -m), 0.0, m > 0,
                  f"least Rayleigh quotient of {LAMBDA1_TRIALS} bumps; bottom of the model"
                  f" spectrum {lb:.6g}")]


def _beckner(sess, p, _mode):
    cfg = sess.cfg
    n, g = p.n, p.gamma
    out = []
    t1, t2, t3 = (cfg.tol_for(k) for k in ("beckner.extremal", "beckner.random", "beckner.sharp"))
    for t in (0.0, 0.3, 0.6):
        ratio = beckner_ratio(extremal_zonal(n, g, t), g)
        r = abs(ratio - 1)
        out.append(Check("beckner", f"extremal_t{t:g}", "sphere", n, g, None, None, ratio, 1.0, r,
                         t1, _status(r, t1), "conformal image of a constant"))
    rng = _rng(cfg.seed, "beckner", n, g)
    worst = math.inf
    for _ in range(BECKNER_RANDOM):
        L = int(rng.integers(1, 9))
        worst = min(worst, beckner_ratio(ZonalFunction(n, rng.standard_normal(L + 1)), g))
    out.append(Check("beckner", "random_min", "sphere", n, g, None, None, worst, 1.0,
                     max(0.0, 1 - worst), t2, 1 - worst <= t2,
                     f"least ratio over {BECKNER_RANDOM} random zonal functions"))
    c = beckner_constant(n, g)
    m0 = gjms_multiplier(ModelGeometry("ball_geodesic", n, 0), g)
    r = _rel(c, m0)
    out.append(Check("beckner", "sharp_constant", "sphere", n, g, None, None, c, m0, r, t3,
                     _status(r, t3), "sharp constant against the degree-0 symbol"))
    # chain with the trace inequality on extremal data
    orders = [g - 2 * j if j <= p.half_floor else 2 * j - g for j in range(p.k)]
    if all(0 < mu < n / 2 for mu in orders):
        data = [extremal_zonal(n, mu, 0.3 + 0.1 * j) for j, mu in enumerate(orders)]
        rhs = ball_trace_rhs(data, p)
        lhs = zonal_extension_energy(data, p)
        r = _rel(lhs, rhs)
        out.append(Check("beckner", "trace_chain", "sphere", n, g, None, None, lhs, rhs, r, t1,
                         _status(r, t1),
                         "extension energy against the summed Sobolev bounds on extremals"))
    return out


def _transforms(sess, p, _mode):
    cfg = sess.cfg
    n, g = p.n, p.gamma
    rng = _rng(cfg.seed, "transforms", n)
    te, tf = cfg.tol_for("transforms.exact"), cfg.tol_for("transforms.fd")
    x, y = sample_points(n, TRANSFORM_POINTS, rng)
    out = []
    rec = jacobian_identities(x, y)
    for name, arr in (("defining", rec.defining), ("volume", rec.volume),
                      ("boundary", rec.boundary)):
        r = float(np.abs(arr).max())
        out.append(Check("transforms", f"jacobian_{name}", "halfspace-ball", n, g, None, None,
                         None, None, r, te, _status(r, te), f"{TRANSFORM_POINTS} points"))
    w = mobius(x, y)
    xb, yb = mobius_inverse(w)
    r = float(max(np.abs(xb - x).max(), np.abs(yb - y).max()))
    out.append(Check("transforms", "roundtrip", "halfspace-ball", n, g, None, None, None, None,
                     r, te, _status(r, te), "inverse of the Moebius map"))
    inside = float(np.max(np.linalg.norm(w, axis=1)))
    out.append(Check("transforms", "interior", "halfspace-ball", n, g, None, None, inside, 1.0,
                     max(0.0, inside - 1 + 1e-15), 0.0, inside < 1, "|M(x, y)| < 1"))
    fam = [("one", QuadraticTest(1.0, np.zeros(n + 1), np.zeros((n + 1, n + 1)))),
           ("coordinate", QuadraticTest(0.0, np.eye(n + 1)[n], np.zeros((n + 1, n + 1)))),
           ("norm_squared", QuadraticTest(0.0, np.zeros(n + 1), np.eye(n + 1)))]
    fam += [(f"quadratic{i}", QuadraticTest.random(n, rng)) for i in range(3)]
    for name, v in fam:
        r = isometry_check(v, x[:10], y[:10])
        out.append(Check("transforms", f"isometry_{name}", "halfspace-ball", n, g, None, None,
                         None, None, r, tf, _status(r, tf), "finite differences, 10 points"))
    xs = rng.uniform(-1.5, 1.5, (20, n))
    U = lambda wpt: 1.0 + 0.5 * wpt[:, -1] - 0.3 * wpt[:, 0] ** 2
    r = covariance_check_B0(U, xs, g)
    out.append(Check("transforms", "restriction_covariance", "halfspace-ball", n, g, None, 0,
                     None, None, r, tf, _status(r, tf), "y -> 0 limit with Jacobian weights"))
    for deg in (0, 1):
        r = p_covariance_check(n, g, xs, deg)
        out.append(Check("transforms", f"operator_covariance_deg{deg}", "halfspace-ball", n, g,
                         None, None, None, None, r, tf, _status(r, tf),
                         "sphere symbol against the fractional Laplacian closed form"))
    return out


SUITES = {
    "extension": (_extension, "modes"),
    "symmetry": (_symmetry, "modes"),
    "trace": (_trace, "modes"),
    "identity": (_identity, "modes"),
    "scattering": (_scattering, "modes"),
    "beckner": (_beckner, "params"),
    "transforms": (_transforms, "params"),
    "lambda1": (_lambda1, "modes"),
}


def run_suite(name, sess):
    """All Check records of one suite, sorted by check id."""
    if name not in SUITES:
        raise ConfigError(f"unknown suite {name!r}")
    fn, over = SUITES[name]
    cfg = sess.cfg
    if over == "modes":
        tasks = [(sess, p, m) for p in cfg.params() for m in cfg.modes()]
    else:
        tasks = [(sess, p, None) for p in cfg.params()]
    out = [c for chunk in _grid_map(fn, tasks) for c in chunk]
    return sorted(out, key=lambda c: c.check_id)
