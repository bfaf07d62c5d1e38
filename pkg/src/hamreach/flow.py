"""Symplectic integration of single and switched Hamiltonian flows.

All flows use the implicit midpoint rule with a fixed step; one step of
every leg is shortened so each leg lands exactly on its duration.
Circle coordinates are reduced after each completed step, never inside
the fixed-point solve.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import Expr, Manifold, PhasePoint, Var, add, diff, scalar_function, simplify, vector_function
from .poisson import _check_on

DEFAULT_TOL = 1e-13
DEFAULT_MAX_ITER = 50


class FlowError(RuntimeError):
    pass


class ConvergenceError(FlowError):
    pass


class EscapeError(FlowError):
    """The trajectory left the bounding box of a non-compact manifold."""


def field_expressions(H: Expr, manifold: Manifold) -> tuple[Expr, ...]:
    """``(dH/dp_1..dH/dp_d, -dH/dx_1..-dH/dx_d)`` as expressions."""
    _check_on(manifold, H)
    names = manifold.coordinate_names
    d = manifold.d
    dp = [diff(H, n) for n in names[d:]]
    dx = [-diff(H, n) for n in names[:d]]
    return tuple(dp + dx)


class VectorField:
    """Hamiltonian vector field ``X_H = (dH/dp, -dH/dx)`` as an evaluator."""

    def __init__(self, H: Expr, manifold: Manifold):
        self.H = H
        self.manifold = manifold
        self.exprs = field_expressions(H, manifold)
        self._fn = vector_function(self.exprs, manifold.variables)
        self._timed = manifold.has_time

    def raw(self, z: Sequence[float], t: float = 0.0) -> tuple[float, ...]:
        if self._timed:
            return self._fn(*z, t)
        return self._fn(*z)

    def __call__(self, z, t: float | None = None) -> np.ndarray:
        if isinstance(z, PhasePoint):
            t = z.t if t is None else t
            z = z.coords
        return np.array(self.raw(tuple(z), 0.0 if t is None else t))


def hamiltonian_vector_field(H: Expr, manifold: Manifold) -> VectorField:
    return VectorField(H, manifold)


def _box_array(box, manifold: Manifold):
    if box is None:
        return None
    b = np.asarray(box, dtype=float)
    if b.shape == (2,):
        b = np.tile(b, (manifold.dim, 1))
    if b.shape != (manifold.dim, 2):
        raise ValueError("box must be (lo, hi) or one (lo, hi) pair per coordinate")
    return [tuple(row) for row in b]


def action_density(H: Expr, manifold: Manifold) -> Expr:
    """``p . dH/dp - H``, the rate of the action along the flow of H."""
    d = manifold.d
    names = manifold.coordinate_names
    terms = [Var(names[d + i]) * diff(H, names[d + i]) for i in range(d)]
    return simplify(add(*terms, -H))


class _Stepper:
    def __init__(self, field: VectorField, h: float, tol: float, max_iter: int, box=None, density: Expr | None = None):
        if not h > 0:
            raise ValueError("step size must be positive")
        self.field = field
        self.h = h
        self.tol = tol
        self.max_iter = max_iter
        m = field.manifold
        self.periods = [float(P) for P in m.period_values]
        self.box = _box_array(box, m)
        self.dim = m.dim
        self.action = 0.0
        self._density = None
        if density is not None:
            self._density = scalar_function(density, m.variables)
            self._timed = m.has_time

    def step(self, z: list[float], t: float, dt: float) -> list[float]:
        """One implicit midpoint step of signed size dt (no reduction)."""
        raw = self.field.raw
        k = raw(z, t + dt / 2)
        zn = [a + dt * b for a, b in zip(z, k)]
        scale = self.tol * (1.0 + max(abs(a) for a in z))
        for _ in range(self.max_iter):
            mid = [(a + b) * 0.5 for a, b in zip(z, zn)]
            k = raw(mid, t + dt / 2)
            new = [a + dt * b for a, b in zip(z, k)]
            err = max(abs(a - b) for a, b in zip(new, zn))
            zn = new
            if err <= scale:
                if self._density is not None:
                    mid = [(a + b) * 0.5 for a, b in zip(z, zn)]
                    args = mid + [t + dt / 2] if self._timed else mid
                    self.action += dt * self._density(*args)
                return zn
        raise ConvergenceError(f"fixed-point iteration did not converge in {self.max_iter} iterations")

    def reduce(self, z: list[float]) -> list[float]:
        for i, P in enumerate(self.periods):
            if P > 0.0:
                r = z[i] % P
                z[i] = r - P if r >= P else r
        if self.box is not None:
            for i, (lo, hi) in enumerate(self.box):
                if self.periods[i] == 0.0 and not (lo <= z[i] <= hi):
                    raise EscapeError(f"coordinate {i} left the box [{lo}, {hi}]: {z[i]}")
        return z

    def run(self, z: list[float], t: float, T: float, sample_every: int = 0):
        """Integrate for signed time T; optionally collect samples.

        Forward legs take the shortened step last and backward legs take
        it first, so running a leg and then its reverse retraces the same
        steps.  Returns (z_end, samples) with samples a list of (elapsed, z)."""
        samples = []
        if T == 0:
            return z, samples
        sgn = 1.0 if T > 0 else -1.0
        n = max(1, math.ceil(abs(T) / self.h - 1e-9))
        short = abs(T) - (n - 1) * self.h
        done = 0.0
        for j in range(n):
            if sgn > 0:
                size = self.h if j < n - 1 else short
            else:
                size = short if j == 0 else self.h
            z = self.reduce(self.step(z, t + sgn * done, sgn * size))
            done = done + size if j < n - 1 else abs(T)
            if sample_every and (j + 1) % sample_every == 0 and j < n - 1:
                samples.append((done, list(z)))
        return z, samples


def integrate(
    H: Expr,
    z0: PhasePoint,
    T: float,
    h: float,
    manifold: Manifold,
    box=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> PhasePoint:
    """Approximate ``phi^T_H(z0)``; negative T runs the field backward."""
    stepper = _Stepper(VectorField(H, manifold), h, tol, max_iter, box)
    t0 = z0.t if z0.t is not None else 0.0
    z, _ = stepper.run(list(z0.coords), t0, T)
    t_end = t0 + T if manifold.has_time else None
    return PhasePoint.on(manifold, z, t_end)


def integrate_extended(
    H: Expr,
    z0: PhasePoint,
    t0: float,
    T: float,
    h: float,
    manifold: Manifold,
    box=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[PhasePoint, float]:
    """Flow of ``(X_H(z, t), 1)`` on ``N x R`` or ``N x T`` from ``(z0, t0)``."""
    if not manifold.has_time:
        raise ValueError("integrate_extended needs a manifold with a time factor")
    start = PhasePoint.on(manifold, z0.coords, t0)
    stepper = _Stepper(VectorField(H, manifold), h, tol, max_iter, box)
    z, _ = stepper.run(list(start.coords), float(t0), T)
    t_end = manifold.reduce_time(float(t0) + T)
    return PhasePoint.on(manifold, z, t_end), t_end


# -- switching schedules --------------------------------------------------------

@dataclass(frozen=True)
class SwitchSchedule:
    """Word ``phi^{t_n}_{H_{i_n}} o ... o phi^{t_1}_{H_{i_1}}`` as legs (i, t)."""

    legs: tuple[tuple[int, float], ...]
    oriented: bool = False

    def __post_init__(self):
        legs = tuple((int(i), float(t)) for i, t in self.legs)
        for i, t in legs:
            if i not in (1, 2):
                raise ValueError(f"field index must be 1 or 2, got {i}")
            if not math.isfinite(t):
                raise ValueError("leg durations must be finite")
            if self.oriented and not t > 0:
                raise ValueError("oriented schedules need strictly positive durations")
        object.__setattr__(self, "legs", legs)

    @property
    def total_time(self) -> float:
        return sum(abs(t) for _, t in self.legs)

    def __len__(self) -> int:
        return len(self.legs)

    @classmethod
    def parse(cls, text: str, oriented: bool | None = None) -> "SwitchSchedule":
        legs = []
        for item in filter(None, (s.strip() for s in text.split(","))):
            m = re.fullmatch(r"([12])\s*:\s*([-+]?[0-9.eE+-]+)", item)
            if not m:
                raise ValueError(f"bad schedule leg {item!r}; expected 'index:duration'")
            legs.append((int(m.group(1)), float(m.group(2))))
        if oriented is None:
            oriented = all(t > 0 for _, t in legs)
        return cls(tuple(legs), oriented)


@dataclass
class Trajectory:
    times: np.ndarray  # cumulative |time| along the schedule
    points: np.ndarray  # (n, 2d)
    t: np.ndarray | None  # extended time, if any
    boundaries: list[int]  # row index of each leg end
    action: float | None = None  # integral of p.dH/dp - H, if tracked

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


def run_schedule(
    H1: Expr,
    H2: Expr,
    z0: PhasePoint,
    schedule: SwitchSchedule,
    h: float,
    manifold: Manifold,
    sample_every: int = 10,
    box=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    track_action: bool = False,
) -> Trajectory:
    """Compose the legs of ``schedule`` starting at ``z0``.

    Rows are the start, interior samples every ``sample_every`` steps and
    every leg end point.  With ``track_action`` the action
    ``int (p . dH/dp - H) dt`` is accumulated by the midpoint rule; on a
    closed word this is the central part of the flow commutator, which
    sees constant brackets that the vector fields cannot.
    """
    steppers = {
        i: _Stepper(
            VectorField(H, manifold), h, tol, max_iter, box,
            action_density(H, manifold) if track_action else None,
        )
        for i, H in ((1, H1), (2, H2))
    }
    z = list(z0.coords)
    t = z0.t if z0.t is not None else 0.0
    elapsed = 0.0
    times, points, tvals, bounds = [0.0], [list(z)], [t], []
    for i, T in schedule.legs:
        if schedule.oriented and T < 0:
            raise ValueError("oriented schedule cannot run backward")
        z, samples = steppers[i].run(z, t, T, sample_every)
        sgn = 1.0 if T >= 0 else -1.0
        for s, zs in samples:
            times.append(elapsed + s)
            points.append(zs)
            tvals.append(manifold.reduce_time(t + sgn * s))
        elapsed += abs(T)
        t = t + T
        times.append(elapsed)
        points.append(list(z))
        tvals.append(manifold.reduce_time(t))
        bounds.append(len(points) - 1)
    return Trajectory(
        np.array(times),
        np.array(points),
        np.array(tvals) if manifold.has_time else None,
        bounds,
        steppers[1].action + steppers[2].action if track_action else None,
    )
