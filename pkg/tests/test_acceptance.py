"""Acceptance criteria 1-12, one test each.  Every test prints a
PASS/FAIL line (straight to the terminal) before asserting."""
import math
import time
from fractions import Fraction

import numpy as np
import pytest
import sympy

from hamreach import larc
from hamreach.expr import Manifold, PhasePoint, exact_value, numpy_function, parse
from hamreach.flow import SwitchSchedule, integrate, run_schedule
from hamreach.poisson import bracket, chain, extended_chain
from hamreach.probe import genericity_probe
from hamreach.reach import ScheduleSampler, estimate_coverage, oriented_vs_unoriented

from conftest import (
    GENERIC_H2,
    PLANE,
    SCENARIO_H1,
    TORUS,
    level_set_cells,
    random_points,
    random_poly_text,
    random_rational_instance,
    random_trig_text,
)

PI = math.pi


@pytest.fixture
def say(capsys):
    def emit(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else ""))
        return ok

    return emit


def _sympy(text, names):
    syms = sympy.symbols(names)
    return sympy.sympify(text.replace("^", "**"), locals=dict(zip(names, syms))), syms


def _rational_points(rng, n, names, lo=-3, hi=3, den=8):
    return [{v: Fraction(int(rng.integers(lo * den, hi * den + 1)), den) for v in names} for _ in range(n)]


# 1 ------------------------------------------------------------------------------------------

def test_criterion_01_bracket_algebra(say):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = {"antisymmetry": 0.0, "jacobi": 0.0, "leibniz": 0.0}
    b = lambda u, v: bracket(u, v, TORUS)
    for _ in range(20):
        F, G, K = (parse(random_trig_text(rng, ["x1", "p1"], terms=3), TORUS) for _ in range(3))
        exprs = [b(F, G), b(G, F), b(F, b(G, K)), b(G, b(K, F)), b(K, b(F, G)), b(F * G, K), F, G, b(G, K), b(F, K)]
        v = numpy_function(exprs, ["x1", "p1"])(*random_points(rng, 100, 2).T)
        worst["antisymmetry"] = max(worst["antisymmetry"], np.abs(v[0] + v[1]).max())
        worst["jacobi"] = max(worst["jacobi"], np.abs(v[2] + v[3] + v[4]).max())
        worst["leibniz"] = max(worst["leibniz"], np.abs(v[5] - v[6] * v[8] - v[7] * v[9]).max())
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1e-10 and elapsed < 10
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", {elapsed:.2f} s"
    assert say(1, "bracket algebra residuals <= 1e-10 in < 10 s", ok, detail)


# 2 ------------------------------------------------------------------------------------------

def test_criterion_02_flowbox_oracle(say):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(10):
        text = random_poly_text(rng, ["x1", "p1"], terms=5, max_deg=6)
        H2 = parse(text, PLANE)
        c = chain(parse("p1", PLANE), H2, 5, PLANE)
        oracle, (X, P) = _sympy(text, ["x1", "p1"])
        pts = _rational_points(rng, 100, ["x1", "p1"], -3, 3)
        for m in range(1, 6):
            dm = sympy.diff(oracle, X, m)
            for z in pts:
                ours = exact_value(c[m], z)
                ref = dm.subs({X: sympy.Rational(z["x1"]), P: sympy.Rational(z["p1"])})
                worst = max(worst, abs(float(ours - Fraction(int(ref.p), int(ref.q)))))
    assert say(2, "B_m = d^m H2/dx1^m for H1 = p1, m = 1..5", worst <= 1e-12, f"max error {worst:.1e}")


# 3 ------------------------------------------------------------------------------------------

EL = Manifold.euclidean(1, time="line")


def test_criterion_03_time_dependent_chain(say):
    # H1 = p1 + (t - t0) g(t) + (t - t0)^4 G(x, p, t): H1(., t0) = p1, and the
    # z-dependent part of dH1/dt vanishes to the order the closed form needs.
    rng = np.random.default_rng(3)
    names = ["x1", "p1", "t"]
    worst = 0.0
    for _ in range(5):
        t0 = Fraction(int(rng.integers(-6, 7)), 4)
        g = random_poly_text(rng, ["t"], terms=2, max_deg=3)
        G = random_poly_text(rng, names, terms=3, max_deg=2)
        h1 = f"p1 + (t - ({t0}))*({g}) + (t - ({t0}))^4*({G})"
        h2 = random_poly_text(rng, names, terms=5, max_deg=3)
        ks = extended_chain(parse(h1, EL), parse(h2, EL), 3, t0, EL, time_sign=-1)
        (s1, (X, P, T)), (s2, _) = _sympy(h1, names), _sympy(h2, names)
        D = lambda e: sympy.diff(e, X) - sympy.diff(e, T)
        pts = _rational_points(rng, 100, ["x1", "p1"])
        for m in range(1, 4):
            first, second = s2, sympy.diff(s1, T)
            for _ in range(m):
                first = D(first)
            for _ in range(m - 1):
                second = D(second)
            formula = sympy.expand((first + second).subs(T, sympy.Rational(t0)))
            for z in pts:
                ref = formula.subs({X: sympy.Rational(z["x1"]), P: sympy.Rational(z["p1"])})
                ours = exact_value(ks[m - 1], z)
                worst = max(worst, abs(float(ours - Fraction(int(ref.p), int(ref.q)))))
    assert say(3, "extended K_m matches the closed form at t0, m = 1..3", worst <= 1e-12, f"max error {worst:.1e}")


# 4 ------------------------------------------------------------------------------------------

def test_criterion_04_rank_correctness(say):
    rng = np.random.default_rng(4)
    mismatches = 0
    for _ in range(50):
        m, H1, H2, k, z = random_rational_instance(rng)
        b = larc.FrameBuilder(H1, H2, k, m)
        exact = larc.exact_rank(b.exact_matrix(z))
        mismatches += exact != b.frame([float(z[v]) for v in m.coordinate_names]).rank
    assert say(4, "SVD rank equals exact Bareiss rank on 50 instances", mismatches == 0, f"{mismatches} mismatches")


# 5 ------------------------------------------------------------------------------------------

def _jacobian_det(H, z, T, h, m, eps=1e-6):
    J = np.zeros((2, 2))
    for j in range(2):
        zp, zm = list(z), list(z)
        zp[j] += eps
        zm[j] -= eps
        a = np.array(integrate(H, PhasePoint(tuple(zp)), T, h, m).coords)
        b = np.array(integrate(H, PhasePoint(tuple(zm)), T, h, m).coords)
        J[:, j] = (a - b) / (2 * eps)
    return float(np.linalg.det(J))


def test_criterion_05_integrator_suite(say):
    start = time.perf_counter()
    osc = parse("(x1^2 + p1^2)/2", PLANE)
    end = integrate(osc, PLANE.point([1.0], [0.0]), 2 * PI, 1e-3, PLANE).coords
    period = math.hypot(end[0] - 1.0, end[1])

    dets = [
        abs(_jacobian_det(parse(src, PLANE), (0.3, 0.5), 1.0, 1e-3, PLANE) - 1.0)
        for src in ("p1^2/2 - cos(x1)", "x1^2*p1^2/2 + x1^3/3 + p1", "(x1^2 + p1^2)/2")
    ]

    H = parse("cos(p1) - 2*cos(x1) + 0.3*sin(x1 + p1)", TORUS)
    z0 = TORUS.point([0.5], [0.2])
    hs = [0.04, 0.02, 0.01]
    ref = integrate(H, z0, 2.0, hs[-1] / 16, TORUS)
    errs = [TORUS.distance(integrate(H, z0, 2.0, h, TORUS).coords, ref.coords) for h in hs]
    order = min(math.log2(errs[i] / errs[i + 1]) for i in range(2))

    H1 = parse(SCENARIO_H1, TORUS)
    rev = 0.0
    for z in [(0.1, 0.2), (2.0, 5.0), (4.0, 1.0)]:
        p = TORUS.point([z[0]], [z[1]])
        back = integrate(H1, integrate(H1, p, 3.0, 1e-3, TORUS), -3.0, 1e-3, TORUS)
        rev = max(rev, TORUS.distance(back.coords, p.coords))
    elapsed = time.perf_counter() - start

    parts = [
        ("oscillator period return <= 1e-8 at h = 1e-3", period <= 1e-8, f"{period:.3e}"),
        ("|det J - 1| <= 1e-6", max(dets) <= 1e-6, f"{max(dets):.1e}"),
        ("convergence order >= 1.9", order >= 1.9, f"{order:.3f}"),
        ("reversibility <= 1e-9", rev <= 1e-9, f"{rev:.1e}"),
        ("runtime < 30 s", elapsed < 30, f"{elapsed:.1f} s"),
    ]
    for title, ok, detail in parts:
        say(5, title, ok, detail)
    failed = [t for t, ok, _ in parts if not ok]
    assert say(5, "integrator suite", not failed, "failed: " + "; ".join(failed) if failed else "all parts")


# 6 ------------------------------------------------------------------------------------------

def test_criterion_06_commutator_scaling(say):
    # For H1 = p, H2 = x the flows are translations and the word returns
    # exactly to the start; the commutator shows up in the action of the
    # closed word, -s^2 {H1, H2}.
    H1, H2 = parse("p1", PLANE), parse("x1", PLANE)
    ss = np.array([1e-2, 5e-3, 2.5e-3])
    actions, disp = [], 0.0
    for s in ss:
        word = SwitchSchedule(((1, s), (2, s), (1, -s), (2, -s)))
        tr = run_schedule(H1, H2, PLANE.point([0.0], [0.0]), word, s / 10, PLANE, track_action=True)
        actions.append(tr.action)
        disp = max(disp, float(np.abs(tr.end).max()))
    slope, intercept = np.polyfit(np.log(ss), np.log(np.abs(actions)), 1)
    coef = -actions[0] / ss[0] ** 2
    ok = abs(slope - 2.0) <= 0.1 and abs(coef - 1.0) <= 1e-6
    detail = f"exponent {slope:.4f}, coefficient {coef:.6f}, endpoint displacement {disp:.1e}"
    assert say(6, "square-word commutator scales as s^2 with {H1,H2} = 1", ok, detail)


# 7 ------------------------------------------------------------------------------------------

def test_criterion_07_degenerate_confinement(say):
    H1 = parse(SCENARIO_H1, TORUS)
    rows = []
    for z in [(0.3, 0.7), (2.0, 1.0), (4.0, 0.5)]:
        g = estimate_coverage(H1, H1, z, ScheduleSampler(seed=1), 5e4, 64, TORUS)
        oracle = len(level_set_cells(math.cos(z[0]) + math.cos(z[1]), 64))
        rows.append((z, g.cells_visited, oracle))
    ok = all(abs(a - b) <= 2 for _, a, b in rows)
    detail = "; ".join(f"{z}: {a} cells vs oracle {b}" for z, a, b in rows)
    assert say(7, "H2 = H1 coverage within 2 cells of the level-set oracle", ok, detail)


# 8, 9 ---------------------------------------------------------------------------------------

def test_criterion_08_generic_coverage(scenario, say):
    m, H1, H2 = scenario
    scan = larc.grid_scan(H1, H2, 4, m, 64)
    fracs = [estimate_coverage(H1, H2, (0.3, 0.7), ScheduleSampler(seed=s), 5e4, 64, m).fraction for s in (1, 2, 3)]
    ok = not scan.failures and min(fracs) >= 0.99
    detail = f"{len(scan.failures)} N' failures, unoriented coverage {fracs}"
    assert say(8, "scenario grid scan clean and coverage >= 0.99 for 3 seeds", ok, detail)


def test_criterion_09_oriented_coverage(scenario, say):
    m, H1, H2 = scenario
    rows = []
    for s in (1, 2, 3):
        c = oriented_vs_unoriented(H1, H2, (0.3, 0.7), ScheduleSampler(seed=s), 5e4, 64, m)
        rows.append((c.oriented.fraction, c.gap))
    ok = all(f >= 0.99 and gap <= 0.01 for f, gap in rows)
    detail = "; ".join(f"oriented {f:.4f}, gap {gap:.4f}" for f, gap in rows)
    assert say(9, "oriented coverage >= 0.99 with gap <= 0.01", ok, detail)


# 10 -----------------------------------------------------------------------------------------

def test_criterion_10_genericity_probe(scenario, say):
    m, H1, _ = scenario
    r = genericity_probe(H1, m, 4, family="trig", F=2, samples=100, resolution=64, seed=1, cross_checks=5)
    lo, hi = r.interval
    checked = {c["sample"] for c in r.cross_checks}
    ok = r.failures == 0 and len(checked) == 5 and r.cross_checks_agree
    detail = (
        f"{r.failures}/{r.n} failures, 95% interval [{lo:.4f}, {hi:.4f}], "
        f"{len(r.cross_checks)} exact spot checks on {len(checked)} samples agree: {r.cross_checks_agree}"
    )
    assert say(10, "100 random trig H2 produce no rank failures", ok, detail)


# 11 -----------------------------------------------------------------------------------------

def test_criterion_11_assumption_and_escape(say):
    H1 = parse(SCENARIO_H1, TORUS)
    good = larc.check_assumption_h1(H1, TORUS, 64)
    bad = larc.check_assumption_h1(parse("cos(p1)", TORUS), TORUS, 64)
    H2 = parse(GENERIC_H2, TORUS)
    escapes = [larc.escape_check(H1, H2, c.point, TORUS, horizon=1e-3) for c in good.critical_points]
    ok = (
        len(good.critical_points) == 4
        and good.isolated
        and good.status == "satisfied"
        and bad.status == "violated"
        and len(escapes) == 4
        and all(e.escape_time is not None and e.escape_time <= 1e-3 for e in escapes)
    )
    detail = (
        f"{len(good.critical_points)} critical points ({good.status}), cos p: {bad.status}, "
        f"escape times {[e.escape_time for e in escapes]}"
    )
    assert say(11, "4 isolated critical points, cos p violates, escape within 1e-3", ok, detail)


# 12 -----------------------------------------------------------------------------------------

def test_criterion_12_codimension_formulas(say):
    bad = []
    for d in (1, 2, 3):
        for k in range(2 * d, 4 * d + 3):
            a = larc.codim_formulas(k, d)
            if (a.w_prime, a.w0_lower, a.k_min) != (k - 2 * d + 1, 2 * d + 2, 4 * d):
                bad.append(("autonomous", k, d, a))
            n = larc.codim_formulas(k, d, autonomous=False)
            if (n.w_prime, n.k_min) != (k - 2 * d, 4 * d + 1):
                bad.append(("time-dependent", k, d, n))
    # worked values
    if tuple(larc.codim_formulas(4, 1)) != (3, 4, 4):
        bad.append("k=4, d=1")
    if any(larc.codim_formulas(2 * d, d).w_prime != 1 for d in (1, 2, 3)):
        bad.append("k = 2d")
    if any(larc.codim_formulas(4 * d + 1, d, autonomous=False).w_prime != 2 * d + 1 for d in (1, 2, 3)):
        bad.append("k = 4d + 1, time-dependent")
    assert say(12, "codimension formulas for d = 1, 2, 3", not bad, f"{len(bad)} mismatches")
