import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from hamreach.expr import Manifold, parse

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TORUS = Manifold.torus(1)
PLANE = Manifold.euclidean(1)
SCENARIO_H1 = "cos(x1) + cos(p1)"
SCENARIO_H2 = "cos(x1 - p1) + 2*cos(2*x1 + p1)"
# The scenario H2 has X_H2 = 0 at all four critical points of H1, so
# escape and multistart checks use this generic companion instead.
GENERIC_H2 = "sin(x1 + p1) + cos(x1 - p1) + 2*cos(2*x1 + p1)"


def rational(rng, lo=-3, hi=3, den=4):
    return Fraction(int(rng.integers(lo * den, hi * den + 1)), den)


def random_poly_text(rng, names, terms=5, max_deg=3):
    out = []
    for _ in range(terms):
        c = rational(rng)
        mono = "*".join(f"{n}^{int(rng.integers(0, max_deg + 1))}" for n in names)
        out.append(f"({c})*{mono}")
    return " + ".join(out)


def random_trig_text(rng, names, terms=4, F=2):
    out = []
    for _ in range(terms):
        c = rational(rng, den=3)
        freqs = rng.integers(-F, F + 1, len(names))
        if not freqs.any():
            freqs[0] = 1
        arg = " + ".join(f"({int(a)})*{n}" for a, n in zip(freqs, names))
        fn = "cos" if rng.random() < 0.5 else "sin"
        out.append(f"({c})*{fn}({arg} + {rational(rng, den=5)})")
    return " + ".join(out)


def random_points(rng, n, dim, lo=-3.0, hi=3.0):
    return rng.uniform(lo, hi, (n, dim))


def random_rational_instance(rng):
    """Polynomial pair on R^2d with a rational evaluation point (k <= 6, d <= 2)."""
    d = int(rng.integers(1, 3))
    k = int(rng.integers(2, 7))
    m = Manifold.euclidean(d)
    names = list(m.coordinate_names)
    H1 = parse(random_poly_text(rng, names, terms=3, max_deg=2), m)
    if rng.random() < 0.3:
        H2 = H1 * H1  # degenerate on purpose
    else:
        H2 = parse(random_poly_text(rng, names, terms=3, max_deg=3), m)
    z = {n: Fraction(int(rng.integers(-4, 5)), int(rng.integers(1, 4))) for n in names}
    return m, H1, H2, k, z


def level_set_cells(H1_value, resolution, samples=200_000):
    """Cells of the 2-torus grid met by {cos x + cos p = c}, from a dense
    parametrization of the curve (both graphs: p over x and x over p)."""
    P = 2 * math.pi
    cells = set()
    s = np.linspace(0.0, P, samples, endpoint=False)
    for u, other_first in ((s, True), (s, False)):
        v = H1_value - np.cos(u)
        ok = np.abs(v) <= 1.0
        w = np.arccos(np.clip(v[ok], -1, 1))
        for branch in (w, P - w):
            a, b = (u[ok], branch) if other_first else (branch, u[ok])
            i = np.floor(a / P * resolution).astype(int) % resolution
            j = np.floor(b / P * resolution).astype(int) % resolution
            cells.update(zip(i.tolist(), j.tolist()))
    return cells


@pytest.fixture
def rng():
    return np.random.default_rng(20241014)


@pytest.fixture(scope="session")
def scenario():
    H1 = parse(SCENARIO_H1, TORUS)
    H2 = parse(SCENARIO_H2, TORUS)
    return TORUS, H1, H2


coefficients = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def poly_texts(draw, names=("x1", "p1"), max_terms=5, max_deg=3):
    n = draw(st.integers(1, max_terms))
    terms = []
    for _ in range(n):
        c = draw(coefficients)
        degs = [draw(st.integers(0, max_deg)) for _ in names]
        terms.append(f"({c})*" + "*".join(f"{v}^{k}" for v, k in zip(names, degs)))
    return " + ".join(terms)
