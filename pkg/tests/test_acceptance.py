"""
The eleven acceptance criteria at their stated tolerances and time limits.

Each test records a PASS/FAIL line, printed in the terminal summary. The
criteria that do not hold as stated are strict xfails that raise
CriterionNotMet only after the measured residuals (and the normalisation
that does close) have been recorded; any other assertion error is a real
failure.
"""
import json
import time

import numpy as np
import pytest

from gjms_lab import boundary, energy, extension
from gjms_lab.boundary import ModelGeometry
from gjms_lab.cli import REPORT_GEOMETRIES, _dump, run_report
from gjms_lab.constants import (GammaParams, ladder_constants, ladder_constants_gamma_form,
                                spectral_constants, trace_constants)
from gjms_lab.constants import trace_constants_alternates
from gjms_lab.energy import BoundaryData, extension_residual
from gjms_lab.extension import (fractional_operator_eigenvalue, gjms_multiplier,
                                neumann_constant, scattering_eigenvalue)
from gjms_lab.suites import RunConfig, Session, run_suite


class CriterionNotMet(AssertionError):
    """The criterion fails as stated; the analysis is in the verdict line."""


not_met = pytest.mark.xfail(strict=True, raises=CriterionNotMet)

# grid of criterion 3, reused by 4 to 7
GRID = [(3, 0.6), (3, 1.4), (4, 0.6), (4, 1.4), (5, 2.3)]
LMAX = 8


def cold():
    """Drop every cache so each criterion is timed from scratch."""
    extension.poisson_mode.cache_clear()
    energy.boundary_map.cache_clear()
    boundary._operator.cache_clear()


@pytest.fixture(autouse=True)
def single_thread(monkeypatch):
    monkeypatch.delenv("GJMS_LAB_THREADS", raising=False)
    cold()


def grid_configs():
    by_n = {}
    for n, g in GRID:
        by_n.setdefault(n, []).append(g)
    return [RunConfig(geometry="ball", n=n, gammas=tuple(gs), lmax=LMAX).validate()
            for n, gs in by_n.items()]


def grid_records(suite):
    return [r for cfg in grid_configs() for r in run_suite(suite, Session(cfg))]


def worst(records, prefix):
    return max(r.residual for r in records if r.name == prefix)


def rel(a, b):
    s = max(abs(a), abs(b))
    return 0.0 if s == 0 else abs(a - b) / s


# ---------------------------------------------------------------------------


@not_met
def test_01_constants(verdict):
    t0 = time.perf_counter()
    ladder, trace, scaled = 0.0, 0.0, 0.0
    for n in (3, 5, 8):
        for g in (0.4, 0.75, 1.3, 1.5, 2.25, 2.6, 3.5):
            if g >= n / 2:
                continue
            p = GammaParams(n, g)
            for j in range(p.floor_g + 1):
                prod = ladder_constants(p, j)[:3]
                gam = ladder_constants_gamma_form(p, j)[:3]
                ladder = max(ladder, *(rel(a, b) for a, b in zip(prod, gam)))
                sigma, varsigma = trace_constants(p, j)
                alt = trace_constants_alternates(p, j)
                trace = max(trace, rel(sigma, alt["sigma_pi"]), rel(varsigma, alt["varsigma_pi"]))
                four = 4.0 ** p.floor_g
                scaled = max(scaled, rel(four * sigma, alt["sigma_pi"]),
                             rel(four * varsigma, alt["varsigma_pi"]))
    dt = time.perf_counter() - t0
    ok = ladder <= 1e-12 and trace <= 1e-12 and dt < 1.0
    verdict(1, ok, f"constants: b/pi vs Gamma forms {ladder:.1e}; printed sigma/varsigma vs "
                   f"pi-product forms {trace:.1e} (tol 1e-12); 4^floor(gamma) x printed vs pi "
                   f"{scaled:.1e}; {dt:.2f} s")
    assert ladder <= 1e-12 and scaled <= 1e-12 and dt < 1.0
    if not ok:
        raise CriterionNotMet("printed sigma/varsigma are the pi forms over 4^floor(gamma)")


def test_02_neumann(verdict):
    t0 = time.perf_counter()
    res = 0.0
    for g in (0.25, 0.5, 0.75):
        for xi in (0.5, 1.0, 2.0):
            val = neumann_constant(ModelGeometry("halfspace", 3, xi), GammaParams(3, g))
            res = max(res, rel(val, xi ** (2 * g)))
    dt = time.perf_counter() - t0
    ok = res <= 1e-8 and dt < 1.0
    verdict(2, ok, f"halfspace Neumann limit vs |xi|^2g: max rel {res:.1e} (tol 1e-8); {dt:.2f} s")
    assert ok


@not_met
def test_03_scattering(verdict):
    t0 = time.perf_counter()
    res, scaled = 0.0, 0.0
    for n, g in GRID:
        c = spectral_constants(GammaParams(n, g))[0]
        for l in range(LMAX + 1):
            geom = ModelGeometry("ball_geodesic", n, l)
            cS = c * scattering_eigenvalue(geom, n / 2 + g)
            res = max(res, rel(cS, gjms_multiplier(geom, g)))
            scaled = max(scaled, rel(cS, fractional_operator_eigenvalue(geom, g)))
    dt = time.perf_counter() - t0
    ok = res <= 1e-7 and dt < 5.0
    verdict(3, ok, f"c_gamma S vs Gamma-ratio symbol: max rel {res:.3f} (tol 1e-7); against "
                   f"2^-gamma x symbol {scaled:.1e}; {dt:.2f} s")
    assert scaled <= 1e-7 and dt < 5.0
    if not ok:
        raise CriterionNotMet("c_gamma S is 2^-gamma times the symbol")


def test_04_extension(verdict):
    t0 = time.perf_counter()
    res, count = 0.0, 0
    rng = np.random.default_rng(2024)
    for n, g in GRID:
        p = GammaParams(n, g)
        for l in range(LMAX + 1):
            r = extension_residual(ModelGeometry("ball_geodesic", n, l), p,
                                   BoundaryData.random(p, rng))
            res = max(res, r.max())
            count += r.size
    dt = time.perf_counter() - t0
    ok = res <= 1e-6 and dt < 20.0
    verdict(4, ok, f"extension identities (both families, {count} terms, P = c_mu S): "
                   f"max rel {res:.1e} (tol 1e-6); {dt:.2f} s")
    assert ok


@not_met
def test_05_symmetry(verdict):
    t0 = time.perf_counter()
    recs = grid_records("symmetry")
    dt = time.perf_counter() - t0
    printed = [r for r in recs if r.name == "theorem"]
    bad = sorted({(r.n, r.gamma) for r in printed if not r.passed})
    res, pi = worst(recs, "theorem"), worst(recs, "pi")
    ok = not bad and dt < 20.0
    verdict(5, ok, f"Q symmetry over 50 pairs x {len(printed)} modes: printed sigma worst {res:.1e}"
                   f" (tol 1e-6, failing at (n, gamma) {bad}); pi-product sigma worst {pi:.1e}; "
                   f"{dt:.2f} s")
    assert pi <= 1e-6 and dt < 20.0
    assert all(g >= 1 for _, g in bad)
    if not ok:
        raise CriterionNotMet("printed sigma breaks symmetry once floor(gamma) >= 1")


def test_06_trace(verdict):
    t0 = time.perf_counter()
    recs = grid_records("trace")
    dt = time.perf_counter() - t0
    eq = worst(recs, "equality")
    add = worst(recs, "additivity")
    strict = min(r.lhs for r in recs if r.name == "strict")
    ok = all(r.passed for r in recs) and dt < 30.0
    verdict(6, ok, f"trace inequality: equality {eq:.1e}, additivity {add:.1e} (tol 1e-6), "
                   f"least gap with a bump {strict:.3e} > 0; {dt:.2f} s")
    assert ok


@not_met
def test_07_main_identity(verdict):
    t0 = time.perf_counter()
    recs = grid_records("identity")
    dt = time.perf_counter() - t0
    res = {k: worst(recs, k) for k in ("theorem", "pi", "2n")}
    small = max(r.residual for r in recs if r.name == "theorem" and r.gamma < 1)
    ok = res["theorem"] <= 1e-6 and dt < 30.0
    verdict(7, ok, f"bulk decomposition: printed sigma/varsigma worst {res['theorem']:.1e} "
                   f"(gamma < 1 only: {small:.1e}); pi-product forms {res['pi']:.1e}; with 2^-n "
                   f"{res['2n']:.1e}; tol 1e-6; {dt:.2f} s")
    assert res["pi"] <= 1e-6 and small <= 1e-6 and res["2n"] > 1e-2 and dt < 30.0
    if not ok:
        raise CriterionNotMet("only the pi-product forms close the identity for floor(gamma) >= 1")


def test_08_beckner(verdict):
    t0 = time.perf_counter()
    recs = run_suite("beckner", Session(RunConfig().validate()))
    dt = time.perf_counter() - t0
    ext = max(r.residual for r in recs if r.name.startswith("extremal"))
    low = min(r.lhs for r in recs if r.name == "random_min")
    sharp = worst(recs, "sharp_constant")
    ok = all(r.passed for r in recs) and dt < 10.0
    verdict(8, ok, f"Beckner: extremal |ratio-1| {ext:.1e} (tol 1e-6), least random ratio "
                   f"{low:.4f} (>= 1-1e-8), sharp constant {sharp:.1e} (tol 1e-13); {dt:.2f} s")
    assert ok


def test_09_transforms(verdict):
    t0 = time.perf_counter()
    recs = run_suite("transforms", Session(RunConfig().validate()))
    dt = time.perf_counter() - t0
    jac = max(r.residual for r in recs if r.name.startswith("jacobian"))
    iso = max(r.residual for r in recs if r.name.startswith("isometry"))
    ok = jac <= 1e-12 and iso <= 1e-6 and all(r.passed for r in recs) and dt < 2.0
    verdict(9, ok, f"transforms: Jacobian identities {jac:.1e} at 50 points (tol 1e-12), "
                   f"isometry {iso:.1e} (tol 1e-6); {dt:.2f} s")
    assert ok


def test_10_lambda1(verdict):
    t0 = time.perf_counter()
    recs = []
    for geo in ("ball", "halfspace"):
        recs += run_suite("lambda1", Session(RunConfig(geometry=geo).validate()))
    dt = time.perf_counter() - t0
    low = min(r.lhs for r in recs)
    ok = all(r.passed for r in recs) and dt < 10.0
    verdict(10, ok, f"lambda1 probe: least Rayleigh minimum {low:.3f} > 0 over {len(recs)} "
                    f"geometry/gamma/mode cells, 20 trials each; {dt:.2f} s")
    assert ok


def test_11_report(verdict):
    cfg = RunConfig().validate()
    t0 = time.perf_counter()
    first = _dump(run_report(cfg, REPORT_GEOMETRIES))
    dt = time.perf_counter() - t0
    cold()
    second = _dump(run_report(cfg, REPORT_GEOMETRIES))
    doc = json.loads(first)
    same = first == second
    ok = same and dt < 60.0
    verdict(11, ok, f"report: {dt:.1f} s single-threaded (limit 60 s), byte-identical rerun "
                    f"{same}, {len(first)} bytes, summary {doc['summary']}")
    assert ok
