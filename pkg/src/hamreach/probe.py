"""Genericity probe: how often does a random H2 break the rank condition?"""
from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .expr import Expr, Manifold, parse, to_text
from .larc import (
    DEFAULT_CRIT_TOL,
    DEFAULT_RANK_TOL,
    FrameBuilder,
    check_assumption_h1,
    grid_scan,
    spot_check,
)


class ProbeWarning(UserWarning):
    pass


def clopper_pearson(failures: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    """Exact binomial interval for the failure probability."""
    if n <= 0:
        raise ValueError("need at least one trial")
    alpha = 1.0 - confidence
    lo = 0.0 if failures == 0 else float(beta.ppf(alpha / 2, failures, n - failures + 1))
    hi = 1.0 if failures == n else float(beta.ppf(1 - alpha / 2, failures + 1, n - failures))
    return lo, hi


def half_lattice(F: int, dim: int) -> list[tuple[int, ...]]:
    """Frequency vectors in ``[-F, F]^dim`` up to sign, zero excluded."""
    out = []
    for v in itertools.product(range(-F, F + 1), repeat=dim):
        first = next((c for c in v if c != 0), 0)
        if first > 0:
            out.append(v)
    return out


def trig_family_member(rng: np.random.Generator, manifold: Manifold, F: int, coef_range: float) -> str:
    """Text of ``sum c_v cos(v . w z + phi_v)`` with ``w`` the angular
    frequency ``2 pi / period`` of each circle."""
    if not manifold.compact or manifold.has_time:
        raise ValueError("the trig family needs a compact autonomous manifold")
    names = manifold.coordinate_names
    omegas = [f"(2*pi/({to_text(P)}))" for P in manifold.periods]
    terms = []
    for v in half_lattice(F, manifold.dim):
        c = rng.uniform(-coef_range, coef_range)
        phi = rng.uniform(0.0, 2 * math.pi)
        arg = " + ".join(f"{a}*{w}*{n}" for a, w, n in zip(v, omegas, names) if a != 0)
        terms.append(f"({c!r})*cos({arg} + {phi!r})")
    return " + ".join(terms)


@dataclass
class ProbeSample:
    index: int
    h2: str
    failed: bool
    n_failures: int
    sigma_ratio_min: float

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "h2": self.h2,
            "failed": self.failed,
            "rank_deficient_nodes": self.n_failures,
            "sigma_ratio_min": self.sigma_ratio_min,
        }


@dataclass
class ProbeReport:
    family: str
    k: int
    d: int
    resolution: int
    samples: list[ProbeSample]
    cross_checks: list[dict]
    h1_status: str
    warnings: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def failures(self) -> int:
        return sum(s.failed for s in self.samples)

    @property
    def failure_fraction(self) -> float:
        return self.failures / self.n if self.n else 0.0

    @property
    def interval(self) -> tuple[float, float]:
        return clopper_pearson(self.failures, self.n)

    @property
    def cross_checks_agree(self) -> bool:
        return all(c["svd_rank"] == c["exact_rank"] for c in self.cross_checks)

    def as_dict(self) -> dict:
        lo, hi = self.interval
        return {
            "family": self.family,
            "k": self.k,
            "d": self.d,
            "resolution": self.resolution,
            "n": self.n,
            "failures": self.failures,
            "failure_fraction": self.failure_fraction,
            "ci95": [lo, hi],
            "h1_status": self.h1_status,
            "cross_checks": self.cross_checks,
            "cross_checks_agree": self.cross_checks_agree,
            "warnings": list(self.warnings),
            "samples": [s.as_dict() for s in self.samples],
        }


class AssumptionError(ValueError):
    def __init__(self, report):
        super().__init__(f"H1 does not satisfy the critical-point assumption ({report.status})")
        self.report = report


def genericity_probe(
    H1: Expr,
    manifold: Manifold,
    k: int,
    family: str = "trig",
    F: int = 2,
    coef_range: float = 1.0,
    samples: int = 100,
    resolution: int = 64,
    rank_tol: float = DEFAULT_RANK_TOL,
    crit_tol: float = DEFAULT_CRIT_TOL,
    seed: int = 0,
    cross_checks: int = 5,
    nodes_per_check: int = 4,
    workers: int | None = None,
) -> ProbeReport:
    """Draw ``samples`` H2 from the family and grid-scan each pair.

    A sample fails when any grid node off the critical set of H1 is rank
    deficient.  The first ``cross_checks`` samples are re-checked at a few
    nodes (the worst-conditioned one and random others) with high
    precision elimination.
    """
    h1_report = check_assumption_h1(H1, manifold, resolution, crit_tol)
    if not h1_report.satisfied:
        raise AssumptionError(h1_report)
    notes = []
    if k < 4 * manifold.d:
        msg = f"k = {k} is below the genericity threshold 4d = {4 * manifold.d}"
        warnings.warn(msg, ProbeWarning, stacklevel=2)
        notes.append(msg)
    rng = np.random.default_rng(seed)
    check_rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
    out, checks = [], []
    for i in range(samples):
        if family == "trig":
            text = trig_family_member(rng, manifold, F, coef_range)
        elif family == "h1-multiple":
            c = 0.0
            while c == 0.0:
                c = rng.uniform(-coef_range, coef_range)
            text = f"({c!r})*({to_text(H1)})"
        else:
            raise ValueError(f"unknown family {family!r}")
        H2 = parse(text, manifold)
        builder = FrameBuilder(H1, H2, k, manifold)
        report = grid_scan(H1, H2, k, manifold, resolution, rank_tol, crit_tol, workers=workers, builder=builder)
        out.append(ProbeSample(i, text, bool(report.failures), len(report.failures), report.sigma_ratio_min))
        if i < cross_checks:
            idx = [tuple(check_rng.integers(0, resolution, manifold.dim)) for _ in range(nodes_per_check - 1)]
            if report.worst_node is not None:
                idx.insert(0, _node_index(report.worst_node, manifold, resolution))
            for f in report.failures[:2]:
                idx.append(_node_index(f.point, manifold, resolution))
            for c in spot_check(builder, resolution, idx, rank_tol):
                checks.append({"sample": i, **c})
    return ProbeReport(family, k, manifold.d, resolution, out, checks, h1_report.status, notes)


def _node_index(point, manifold: Manifold, resolution: int) -> tuple[int, ...]:
    return tuple(
        int(round(v / P * resolution)) % resolution for v, P in zip(point, manifold.period_values)
    )
