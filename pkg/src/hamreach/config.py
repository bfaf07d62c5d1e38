"""Scenario files: flat ``dotted.key = value`` lines, ``#`` comments, UTF-8.

Example::

    manifold.d = 1
    manifold.periods = 2*pi          # one entry, or one per coordinate; "line" for R
    hamiltonian.h1 = cos(x1) + cos(p1)
    hamiltonian.h2 = cos(x1 - p1) + 2*cos(2*x1 + p1)
    larc.k = 4
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .expr import Expr, ExprError, Manifold, parse, parse_constant


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(key)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)


def _floats(text: str, n: int | None = None) -> tuple[float, ...]:
    vals = tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())
    if n is not None and len(vals) != n:
        raise ValueError(f"expected {n} comma-separated numbers")
    return vals


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


# key -> (attribute, converter)
_KEYS: dict[str, tuple[str, Any]] = {
    "manifold.d": ("d", int),
    "manifold.periods": ("periods", str),
    "manifold.time": ("time", str),
    "manifold.box": ("box", str),
    "hamiltonian.h1": ("h1", str),
    "hamiltonian.h2": ("h2", str),
    "larc.k": ("k", int),
    "larc.rank_tol": ("rank_tol", float),
    "larc.crit_tol": ("crit_tol", float),
    "grid.resolution": ("resolution", int),
    "integrator.h": ("h", float),
    "integrator.tol": ("tol", float),
    "integrator.max_iter": ("max_iter", int),
    "sampler.mode": ("mode", str),
    "sampler.q": ("q", float),
    "sampler.tau_max": ("tau_max", float),
    "sampler.sample_every": ("sample_every", int),
    "reach.budget": ("budget", float),
    "reach.h": ("reach_h", float),
    "reach.start": ("start", str),
    "reach.t0": ("t0", float),
    "reach.t_window": ("t_window", str),
    "run.seed": ("seed", int),
    "run.threads": ("threads", int),
    "output.dir": ("output_dir", str),
    "probe.family": ("family", str),
    "probe.F": ("F", int),
    "probe.coef_range": ("coef_range", float),
    "probe.samples": ("samples", int),
    "probe.cross_checks": ("cross_checks", int),
    "escape.horizon": ("horizon", float),
    "escape.enabled": ("escape", _bool),
}


@dataclass
class ScenarioConfig:
    d: int = 1
    periods: str = "2*pi"
    time: str = "none"
    box: str | None = None
    h1: str | None = None
    h2: str | None = None
    k: int = 4
    rank_tol: float = 1e-8
    crit_tol: float = 1e-6
    resolution: int = 64
    h: float = 1e-3
    tol: float = 1e-13
    max_iter: int = 50
    mode: str = "unoriented"
    q: float = 0.2
    tau_max: float = 2.0
    sample_every: int = 10
    budget: float = 1e4
    reach_h: float = 1e-2
    start: str | None = None
    t0: float = 0.0
    t_window: str | None = None
    seed: int = 0
    threads: int | None = None
    output_dir: str = "out"
    family: str = "trig"
    F: int = 2
    coef_range: float = 1.0
    samples: int = 100
    cross_checks: int = 5
    horizon: float = 1e-3
    escape: bool = True
    lines: dict[str, int] = field(default_factory=dict, repr=False, compare=False)

    # -- loading ------------------------------------------------------------

    @classmethod
    def from_text(cls, text: str, overrides: Mapping[str, str] | None = None) -> "ScenarioConfig":
        cfg = cls()
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("expected 'key = value'", n)
            key, value = (s.strip() for s in line.split("=", 1))
            cfg.set(key, value, n)
        for key, value in (overrides or {}).items():
            cfg.set(key, value, None)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path | None, overrides: Mapping[str, str] | None = None) -> "ScenarioConfig":
        if path is None:
            return cls.from_text("", overrides)
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read scenario: {exc}") from None
        except UnicodeDecodeError:
            raise ConfigError("scenario is not valid UTF-8") from None
        return cls.from_text(text, overrides)

    def set(self, key: str, value: str, line: int | None = None) -> None:
        if key not in _KEYS:
            raise ConfigError("unknown key", line, key)
        attr, conv = _KEYS[key]
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        try:
            setattr(self, attr, conv(value))
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r} ({exc})", line, key) from None
        self.lines[key] = line

    def _fail(self, key: str, message: str):
        raise ConfigError(message, self.lines.get(key), key)

    def validate(self) -> None:
        if self.d < 1:
            self._fail("manifold.d", "must be a positive integer")
        if self.time not in ("none", "line", "circle"):
            self._fail("manifold.time", "must be none, line or circle")
        if self.k < 2:
            self._fail("larc.k", "k must be at least 2")
        for key in ("larc.rank_tol", "larc.crit_tol", "integrator.h", "integrator.tol", "reach.h",
                    "sampler.tau_max", "escape.horizon"):
            attr = _KEYS[key][0]
            v = getattr(self, attr)
            if not (v > 0 and math.isfinite(v)):
                self._fail(key, "must be positive")
        if self.resolution < 2:
            self._fail("grid.resolution", "must be at least 2")
        if self.mode not in ("oriented", "unoriented", "both"):
            self._fail("sampler.mode", "must be oriented, unoriented or both")
        if not 0 < self.q <= 1:
            self._fail("sampler.q", "must lie in (0, 1]")
        if self.sample_every < 1:
            self._fail("sampler.sample_every", "must be at least 1")
        if self.budget < 0:
            self._fail("reach.budget", "must be non-negative")
        if self.family not in ("trig", "h1-multiple"):
            self._fail("probe.family", "must be trig or h1-multiple")
        if self.F < 1 or self.samples < 1 or self.coef_range <= 0 or self.cross_checks < 0:
            self._fail("probe.F", "probe family needs F >= 1, samples >= 1, coef_range > 0")
        self.manifold()  # periods and box must parse

    # -- derived objects -------------------------------------------------------

    def manifold(self) -> Manifold:
        items = [s.strip() for s in self.periods.split(",") if s.strip()]
        if len(items) == 1:
            items = items * (2 * self.d)
        if len(items) != 2 * self.d:
            self._fail("manifold.periods", f"need 1 or {2 * self.d} entries")
        periods = []
        for item in items:
            if item.lower() in ("line", "r", "inf"):
                periods.append(None)
                continue
            try:
                periods.append(parse_constant(item))
            except ExprError as exc:
                self._fail("manifold.periods", f"bad period {item!r}: {exc}")
        try:
            return Manifold(self.d, tuple(periods), self.time)
        except (ValueError, ExprError) as exc:
            self._fail("manifold.periods", str(exc))

    def bounding_box(self):
        if self.box is None:
            return None
        try:
            vals = _floats(self.box)
        except ValueError as exc:
            self._fail("manifold.box", str(exc))
        if len(vals) == 2:
            return [tuple(vals)] * (2 * self.d)
        if len(vals) == 4 * self.d:
            return [tuple(vals[i : i + 2]) for i in range(0, len(vals), 2)]
        self._fail("manifold.box", f"need 2 or {4 * self.d} numbers")

    def hamiltonians(self, need_h2: bool = True) -> tuple[Expr, Expr | None]:
        m = self.manifold()
        if self.h1 is None:
            self._fail("hamiltonian.h1", "missing")
        h1 = self._parse("hamiltonian.h1", self.h1, m)
        h2 = None
        if need_h2:
            if self.h2 is None:
                self._fail("hamiltonian.h2", "missing")
            h2 = self._parse("hamiltonian.h2", self.h2, m)
        return h1, h2

    def _parse(self, key: str, text: str, m: Manifold) -> Expr:
        try:
            return parse(text, m)
        except ExprError as exc:
            self._fail(key, str(exc))

    def start_point(self) -> tuple[float, ...]:
        if self.start is None:
            self._fail("reach.start", "missing")
        try:
            return _floats(self.start, 2 * self.d)
        except ValueError as exc:
            self._fail("reach.start", str(exc))

    def window(self):
        if self.t_window is None:
            return None
        try:
            return _floats(self.t_window, 2)
        except ValueError as exc:
            self._fail("reach.t_window", str(exc))

    def as_dict(self) -> dict:
        inverse = {attr: key for key, (attr, _) in _KEYS.items()}
        return {inverse[f.name]: getattr(self, f.name) for f in fields(self) if f.name in inverse}
