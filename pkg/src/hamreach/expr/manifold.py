"""Phase-space descriptors: coordinate periods, time factor and points."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .nodes import PI, Const, Expr, ExprError, Mul, Pi, Pow, mul, simplify

TIME_FACTORS = ("none", "line", "circle")


def pi_monomial(e: Expr) -> tuple[Fraction, int] | None:
    """Write a normalized constant as ``q * pi**k``; None if it is not one."""
    if isinstance(e, Const):
        return e.value, 0
    if isinstance(e, Pi):
        return Fraction(1), 1
    if isinstance(e, Pow) and isinstance(e.base, Pi):
        return Fraction(1), e.exp
    if isinstance(e, Mul):
        q, k = Fraction(1), 0
        for f in e.args:
            m = pi_monomial(f)
            if m is None:
                return None
            q *= m[0]
            k += m[1]
        return q, k
    return None


@dataclass(frozen=True)
class Manifold:
    """Product of lines and circles, in Darboux order ``x1..xd, p1..pd``.

    ``periods[i]`` is None for a line coordinate, otherwise the circle
    length as an exact constant expression (``2*pi``, ``1``, ...).  The
    optional time factor is a line or the circle of length 1.
    """

    d: int
    periods: tuple[Expr | None, ...]
    time: str = "none"
    _values: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise ExprError("manifold half-dimension must be a positive integer")
        if len(self.periods) != 2 * self.d:
            raise ExprError(f"expected {2 * self.d} coordinate periods, got {len(self.periods)}")
        if self.time not in TIME_FACTORS:
            raise ExprError(f"time factor must be one of {TIME_FACTORS}")
        values = []
        normalized = []
        for p in self.periods:
            if p is None:
                normalized.append(None)
                values.append(0.0)
                continue
            p = simplify(p)
            mono = pi_monomial(p)
            if mono is None or mono[0] <= 0:
                raise ExprError(f"circle period must be a positive constant, got {p}")
            normalized.append(p)
            values.append(float(mono[0]) * math.pi ** mono[1])
        object.__setattr__(self, "periods", tuple(normalized))
        object.__setattr__(self, "_values", tuple(values))

    @classmethod
    def torus(cls, d: int = 1, period: Expr | None = None, time: str = "none") -> "Manifold":
        period = mul(Const(2), PI) if period is None else period
        return cls(d, (period,) * (2 * d), time)

    @classmethod
    def euclidean(cls, d: int = 1, time: str = "none") -> "Manifold":
        return cls(d, (None,) * (2 * d), time)

    @property
    def dim(self) -> int:
        return 2 * self.d

    @property
    def compact(self) -> bool:
        return all(p is not None for p in self.periods)

    @property
    def has_time(self) -> bool:
        return self.time != "none"

    @property
    def coordinate_names(self) -> tuple[str, ...]:
        return tuple(f"x{i}" for i in range(1, self.d + 1)) + tuple(
            f"p{i}" for i in range(1, self.d + 1)
        )

    @property
    def variables(self) -> tuple[str, ...]:
        names = self.coordinate_names
        return names + ("t",) if self.has_time else names

    @property
    def period_values(self) -> np.ndarray:
        """Float periods, 0.0 marking a line coordinate."""
        return np.array(self._values)

    def circle_periods(self) -> dict[str, tuple[Fraction, int]]:
        out = {}
        for name, p in zip(self.coordinate_names, self.periods):
            if p is not None:
                out[name] = pi_monomial(p)
        if self.time == "circle":
            out["t"] = (Fraction(1), 0)
        return out

    def autonomous(self) -> "Manifold":
        return Manifold(self.d, self.periods, "none")

    def with_time(self, time: str) -> "Manifold":
        return Manifold(self.d, self.periods, time)

    def reduce(self, coords) -> np.ndarray:
        z = np.array(coords, dtype=float)
        for i, P in enumerate(self._values):
            if P > 0.0:
                r = z[..., i] % P
                z[..., i] = np.where(r >= P, r - P, r)
        return z

    def reduce_time(self, t: float) -> float:
        if self.time == "circle":
            r = t % 1.0
            return 0.0 if r >= 1.0 else r
        return t

    def displacement(self, a, b) -> np.ndarray:
        """Shortest coordinate difference ``b - a``, wrapping circles."""
        delta = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        for i, P in enumerate(self._values):
            if P > 0.0:
                delta[..., i] = (delta[..., i] + P / 2) % P - P / 2
        return delta

    def distance(self, a, b) -> float:
        return float(np.linalg.norm(self.displacement(a, b)))

    def point(self, x: Sequence[float], p: Sequence[float], t: float | None = None) -> "PhasePoint":
        return PhasePoint.on(self, list(x) + list(p), t)


@dataclass(frozen=True)
class PhasePoint:
    """A phase-space point ``(x, p)`` with optional time, circles reduced."""

    coords: tuple[float, ...]
    t: float | None = None

    @classmethod
    def on(cls, manifold: Manifold, coords, t: float | None = None) -> "PhasePoint":
        z = np.asarray(coords, dtype=float)
        if z.shape != (manifold.dim,):
            raise ValueError(f"point has {z.size} coordinates, manifold needs {manifold.dim}")
        z = manifold.reduce(z)
        if manifold.has_time:
            t = manifold.reduce_time(0.0 if t is None else float(t))
        else:
            t = None
        return cls(tuple(float(v) for v in z), t)

    @property
    def d(self) -> int:
        return len(self.coords) // 2

    @property
    def x(self) -> tuple[float, ...]:
        return self.coords[: self.d]

    @property
    def p(self) -> tuple[float, ...]:
        return self.coords[self.d :]

    def as_array(self) -> np.ndarray:
        return np.array(self.coords)

    def env(self) -> dict[str, float]:
        names = [f"x{i}" for i in range(1, self.d + 1)] + [f"p{i}" for i in range(1, self.d + 1)]
        out = dict(zip(names, self.coords))
        if self.t is not None:
            out["t"] = self.t
        return out
