"""Monte Carlo estimates of orbits and reachable sets on compact manifolds.

Random switching schedules are run from a start point and every sampled
trajectory point marks a cell of an occupancy grid.  The fraction of cells
visited is the coverage.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from ._kernels import STATUS_OK, pack_schedules, schedule_kernel
from ._parallel import map_chunks, split, worker_count
from .expr import Expr, Manifold, PhasePoint
from .flow import DEFAULT_MAX_ITER, DEFAULT_TOL, ConvergenceError, SwitchSchedule
from .poisson import _check_on

MODES = ("oriented", "unoriented")


@dataclass(frozen=True)
class ScheduleSampler:
    """Random words: geometric leg count, alternating fields starting from
    a random one, durations uniform on (0, tau_max].  In unoriented mode
    each duration gets an independent random sign, drawn from a separate
    stream so both modes share the same leg lengths for a given seed."""

    mode: str = "unoriented"
    q: float = 0.2
    tau_max: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not 0 < self.q <= 1:
            raise ValueError("q must lie in (0, 1]")
        if not self.tau_max > 0:
            raise ValueError("tau_max must be positive")

    @property
    def oriented(self) -> bool:
        return self.mode == "oriented"

    def with_mode(self, mode: str) -> "ScheduleSampler":
        return ScheduleSampler(mode, self.q, self.tau_max, self.seed)

    def stream(self) -> Iterator[SwitchSchedule]:
        main_seq, sign_seq = np.random.SeedSequence(self.seed).spawn(2)
        rng = np.random.default_rng(main_seq)
        signs = np.random.default_rng(sign_seq)
        while True:
            n = int(rng.geometric(self.q))
            first = int(rng.integers(1, 3))
            durs = self.tau_max * (1.0 - rng.random(n))
            if not self.oriented:
                durs = durs * (2 * signs.integers(0, 2, n) - 1)
            legs = tuple((1 + (first - 1 + j) % 2, float(durs[j])) for j in range(n))
            yield SwitchSchedule(legs, self.oriented)

    def sample(self, budget: float) -> list[SwitchSchedule]:
        """Schedules whose total |time| is exactly ``budget`` (last one truncated)."""
        if budget < 0:
            raise ValueError("budget must be non-negative")
        out, used = [], 0.0
        if budget == 0:
            return out
        for s in self.stream():
            legs = []
            for i, T in s.legs:
                left = budget - used
                if abs(T) >= left:
                    legs.append((i, math.copysign(left, T)))
                    used = budget
                    break
                legs.append((i, T))
                used += abs(T)
            out.append(SwitchSchedule(tuple(legs), self.oriented))
            if used >= budget:
                return out


@dataclass
class CoverageGrid:
    """Visit counts and first-visit times (cumulative simulated time) per cell."""

    resolution: tuple[int, ...]
    counts: np.ndarray
    first_visit: np.ndarray
    total_time: float = 0.0
    provenance: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, resolution: Sequence[int], provenance: dict | None = None) -> "CoverageGrid":
        shape = tuple(int(r) for r in resolution)
        return cls(shape, np.zeros(shape, dtype=np.int64), np.full(shape, np.inf), 0.0, dict(provenance or {}))

    @property
    def visited(self) -> np.ndarray:
        return self.counts > 0

    @property
    def cells_visited(self) -> int:
        return int(np.count_nonzero(self.counts))

    @property
    def cells_total(self) -> int:
        return int(self.counts.size)

    @property
    def fraction(self) -> float:
        return self.cells_visited / self.cells_total

    def merge(self, other: "CoverageGrid") -> "CoverageGrid":
        """Grid of ``self``'s run followed by ``other``'s run."""
        if self.resolution != other.resolution:
            raise ValueError("cannot merge grids of different resolution")
        return CoverageGrid(
            self.resolution,
            self.counts + other.counts,
            np.minimum(self.first_visit, other.first_visit + self.total_time),
            self.total_time + other.total_time,
            dict(self.provenance),
        )

    def fraction_at(self, t: float) -> float:
        return int(np.count_nonzero(self.first_visit <= t)) / self.cells_total

    def curve(self, max_points: int = 1000) -> list[tuple[float, float]]:
        """Coverage fraction against cumulative simulated time."""
        times = np.sort(self.first_visit[np.isfinite(self.first_visit)].ravel())
        if times.size == 0:
            return [(0.0, 0.0)]
        fracs = np.arange(1, times.size + 1) / self.cells_total
        # keep the last row of every distinct time
        keep = np.append(times[1:] != times[:-1], True)
        times, fracs = times[keep], fracs[keep]
        if times.size > max_points:
            pick = np.unique(np.linspace(0, times.size - 1, max_points).round().astype(int))
            times, fracs = times[pick], fracs[pick]
        pts = [(float(a), float(b)) for a, b in zip(times, fracs)]
        if self.total_time > pts[-1][0]:
            pts.append((float(self.total_time), pts[-1][1]))
        return pts

    def cell_centers(self, axes_span: Sequence[tuple[float, float]]) -> np.ndarray:
        """Centers of visited cells, given (lo, hi) per axis."""
        idx = np.argwhere(self.visited)
        lo = np.array([a for a, _ in axes_span])
        width = np.array([(b - a) / r for (a, b), r in zip(axes_span, self.resolution)])
        return lo + (idx + 0.5) * width


def _axes(manifold: Manifold, resolution: int, t_window=None):
    if not manifold.compact:
        raise ValueError("coverage needs a compact manifold (every coordinate a circle)")
    periods = [float(P) for P in manifold.period_values]
    spans = [(0.0, P) for P in periods]
    t_period = 0.0
    if manifold.time == "circle":
        spans.append((0.0, 1.0))
        t_period = 1.0
    elif manifold.time == "line":
        if t_window is None:
            raise ValueError("time line: coverage needs a t window")
        spans.append((float(t_window[0]), float(t_window[1])))
    res = np.full(len(spans), int(resolution), dtype=np.int64)
    lo = np.array([a for a, _ in spans])
    scale = np.array([r / (b - a) for (a, b), r in zip(spans, res)])
    return spans, res, lo, scale, np.array(periods), t_period


def estimate_coverage(
    H1: Expr,
    H2: Expr,
    z0,
    sampler: ScheduleSampler,
    budget: float,
    resolution: int,
    manifold: Manifold,
    h: float = 1e-2,
    sample_every: int = 10,
    t0: float = 0.0,
    t_window=None,
    workers: int | None = None,
    schedules: Sequence[SwitchSchedule] | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CoverageGrid:
    """Run sampled schedules from ``z0`` until ``budget`` simulated time is used.

    Every schedule restarts at ``z0``.  Cells are marked at the start, every
    ``sample_every`` steps and at each leg end.  The result depends only on
    the inputs and the seed, not on the worker count.
    """
    _check_on(manifold, H1, H2)
    spans, res, lo, scale, periods, t_period = _axes(manifold, resolution, t_window)
    if not h > 0 or sample_every < 1:
        raise ValueError("need h > 0 and sample_every >= 1")
    start = z0 if isinstance(z0, PhasePoint) else PhasePoint.on(manifold, z0)
    if schedules is None:
        schedules = sampler.sample(budget)
    else:
        budget = sum(s.total_time for s in schedules)
    provenance = {
        "start": list(start.coords),
        "t0": float(t0) if manifold.has_time else None,
        "mode": sampler.mode,
        "seed": sampler.seed,
        "q": sampler.q,
        "tau_max": sampler.tau_max,
        "budget": float(budget),
        "h": h,
        "sample_every": sample_every,
        "schedules": len(schedules),
    }
    grid = CoverageGrid.empty(tuple(res), provenance)
    if not schedules:
        return grid
    kernel = schedule_kernel(H1, H2, manifold)
    z_start = np.array(start.coords, dtype=float)
    t_start = float(t0)
    n_chunks = max(1, min(len(schedules), 4 * worker_count(workers)))
    ranges = split(len(schedules), n_chunks)
    # absolute start time of each schedule, independent of the chunking
    offsets = np.cumsum([0.0] + [s.total_time for s in schedules])

    def run(r: range):
        fields, durs, offs = pack_schedules(schedules[r.start : r.stop])
        counts = np.zeros(int(np.prod(res)), dtype=np.int64)
        first = np.full(counts.size, np.inf)
        status = kernel(
            z_start, t_start, fields, durs, offs, offsets[r.start : r.stop], float(h), float(tol),
            int(max_iter), periods, int(sample_every), scale, lo, float(t_period), counts, first, res,
        )
        if status != STATUS_OK:
            raise ConvergenceError("fixed-point iteration did not converge during coverage run")
        return counts, first

    for counts, first in map_chunks(run, ranges, workers):
        grid.counts += counts.reshape(grid.counts.shape)
        np.minimum(grid.first_visit, first.reshape(grid.first_visit.shape), out=grid.first_visit)
    grid.total_time = float(budget)
    return grid


@dataclass
class ModeComparison:
    oriented: CoverageGrid
    unoriented: CoverageGrid

    @property
    def gap(self) -> float:
        return abs(self.unoriented.fraction - self.oriented.fraction)

    def as_dict(self) -> dict:
        return {
            "oriented_fraction": self.oriented.fraction,
            "unoriented_fraction": self.unoriented.fraction,
            "gap": self.gap,
        }


def oriented_vs_unoriented(
    H1: Expr, H2: Expr, z0, sampler: ScheduleSampler, budget: float, resolution: int, manifold: Manifold, **kw
) -> ModeComparison:
    """Coverage in both modes with matched budgets and the same seed."""
    if manifold.time == "line":
        raise ValueError("oriented mode is not meaningful on a time line")
    runs = {
        mode: estimate_coverage(H1, H2, z0, sampler.with_mode(mode), budget, resolution, manifold, **kw)
        for mode in MODES
    }
    return ModeComparison(runs["oriented"], runs["unoriented"])


@dataclass
class MultistartReport:
    starts: list[tuple[float, ...]]
    grids: list[CoverageGrid]

    @property
    def fractions(self) -> list[float]:
        return [g.fraction for g in self.grids]

    def as_dict(self) -> dict:
        f = self.fractions
        return {
            "starts": [list(s) for s in self.starts],
            "fractions": f,
            "min": min(f) if f else None,
            "mean": sum(f) / len(f) if f else None,
            "max": max(f) if f else None,
        }


def multistart_coverage(
    H1: Expr,
    H2: Expr,
    starts: Sequence,
    sampler: ScheduleSampler,
    budget: float,
    resolution: int,
    manifold: Manifold,
    **kw,
) -> MultistartReport:
    """One coverage run per start, each with the same sampler seed."""
    grids, pts = [], []
    for z in starts:
        z = z if isinstance(z, PhasePoint) else PhasePoint.on(manifold, z)
        pts.append(z.coords)
        grids.append(estimate_coverage(H1, H2, z, sampler, budget, resolution, manifold, **kw))
    return MultistartReport(pts, grids)


def extended_coverage(
    H1: Expr,
    H2: Expr,
    z0,
    t0: float,
    sampler: ScheduleSampler,
    budget: float,
    resolution: int,
    manifold: Manifold,
    t_window=None,
    **kw,
) -> CoverageGrid:
    """Coverage of ``N x T`` (or of ``N x [a, b]`` for a time line) by the
    extended fields ``(X_Hi, 1)``."""
    if not manifold.has_time:
        raise ValueError("extended coverage needs a manifold with a time factor")
    if manifold.time == "line" and sampler.oriented:
        raise ValueError("oriented mode on N x R is impossible: time only increases")
    return estimate_coverage(
        H1, H2, z0, sampler, budget, resolution, manifold, t0=t0, t_window=t_window, **kw
    )
