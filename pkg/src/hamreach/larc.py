"""Lie-rank condition for the chain {H1, {H1, ... H2}}, critical loci of H1
and the codimension counts behind the genericity threshold."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import NamedTuple, Sequence

import mpmath
import numpy as np

from ._parallel import map_chunks, split, worker_count
from .expr import (
    Const,
    DomainError,
    Expr,
    Manifold,
    NotRationalError,
    PhasePoint,
    diff,
    exact_value,
    mp_value,
    numpy_function,
)
from .flow import VectorField, _Stepper, field_expressions
from .poisson import chain, extended_brackets

DEFAULT_RANK_TOL = 1e-8
DEFAULT_CRIT_TOL = 1e-6


def numerical_rank(matrix: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> tuple[int, np.ndarray]:
    """Count singular values above ``rank_tol`` times the largest one."""
    s = np.linalg.svd(np.asarray(matrix, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0, s
    return int(np.sum(s > rank_tol * s[0])), s


def equilibrate(matrix: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    """Divide each row by the norm of its entry bounds (see
    ``majorant_source``).  Rows of wildly different size then carry equal
    weight, while rows that vanish by cancellation stay at roundoff level."""
    scale = np.linalg.norm(bounds, axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(scale > 0, matrix / scale, 0.0)
    return out


def scaled_ranks(matrices: np.ndarray, bounds: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Thresholded SVD rank of the equilibrated matrices (stacked on axis 0)."""
    s = np.linalg.svd(equilibrate(matrices, bounds), compute_uv=False)
    top = s[..., 0]
    ranks = np.sum(s > rank_tol * top[..., None], axis=-1)
    return np.where(top > 0, ranks, 0)


def exact_rank(rows: Sequence[Sequence]) -> int:
    """Rank over Q by fraction-free (Bareiss) elimination."""
    mat = []
    for row in rows:
        row = [Fraction(v) for v in row]
        lcm = 1
        for v in row:
            lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
        mat.append([int(v * lcm) for v in row])
    if not mat:
        return 0
    n_rows, n_cols = len(mat), len(mat[0])
    rank, prev = 0, 1
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if mat[r][col] != 0), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        p = mat[rank][col]
        for r in range(rank + 1, n_rows):
            for c in range(col + 1, n_cols):
                mat[r][c] = (mat[r][c] * p - mat[r][col] * mat[rank][c]) // prev
            mat[r][col] = 0
        prev = p
        rank += 1
        if rank == n_rows:
            break
    return rank


@dataclass
class LieFrame:
    """Rows ``d H1, d H2, d {H1,H2}, ...`` at one point (k rows).

    On a manifold with a time factor, rows are instead the extended
    vector fields ``(X_H1, 1), (X_H2, 1), (X_K1, 0), ...``.

    ``singular_values`` belong to the raw matrix; ``rank`` is decided on
    the row-equilibrated one.
    """

    point: tuple[float, ...]
    matrix: np.ndarray
    singular_values: np.ndarray
    rank: int
    rank_tol: float

    @property
    def k(self) -> int:
        return self.matrix.shape[0]

    @property
    def target_rank(self) -> int:
        return self.matrix.shape[1]

    @property
    def full_rank(self) -> bool:
        return self.rank == self.target_rank

    @property
    def sigma_min(self) -> float:
        n = self.target_rank
        if self.singular_values.size < n:
            return 0.0
        return float(self.singular_values[n - 1])

    def as_dict(self) -> dict:
        return {"point": list(self.point), "rank": self.rank, "sigma_min": self.sigma_min}


class FrameBuilder:
    """Symbolic rows of the Lie frame, compiled once and evaluated anywhere."""

    def __init__(self, H1: Expr, H2: Expr, k: int, manifold: Manifold):
        if k < 2:
            raise ValueError("k must be at least 2")
        self.H1, self.H2, self.k, self.manifold = H1, H2, k, manifold
        names = manifold.coordinate_names
        if manifold.has_time:
            rows = [list(field_expressions(H1, manifold)) + [Const(1)]]
            rows.append(list(field_expressions(H2, manifold)) + [Const(1)])
            if k > 2:
                for K in extended_brackets(H1, H2, k - 2, manifold, time_sign=1):
                    rows.append(list(field_expressions(K, manifold)) + [Const(0)])
        else:
            entries = [H1] + list(chain(H1, H2, k - 2, manifold).entries)
            rows = [[diff(B, v) for v in names] for B in entries]
        self.rows = rows
        self.shape = (len(rows), len(rows[0]))
        self._flat = [e for row in rows for e in row]
        self._eval = numpy_function(self._flat, manifold.variables)
        self._bound = numpy_function(self._flat, manifold.variables, majorant=True)
        self._grad_h1 = numpy_function([diff(H1, v) for v in names], manifold.variables)

    def matrices(self, points: np.ndarray) -> np.ndarray:
        """Frames at ``points`` of shape (n, len(variables)) -> (n, k, cols)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = self._eval(*pts.T)
        return np.moveaxis(vals, -1, 0).reshape(len(pts), *self.shape)

    def bounds(self, points: np.ndarray) -> np.ndarray:
        """Entry magnitude bounds matching ``matrices``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = self._bound(*pts.T)
        return np.moveaxis(vals, -1, 0).reshape(len(pts), *self.shape)

    def ranks(self, points: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
        return scaled_ranks(self.matrices(points), self.bounds(points), rank_tol)

    def grad_h1_norm(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.linalg.norm(self._grad_h1(*pts.T), axis=0)

    def frame(self, point, rank_tol: float = DEFAULT_RANK_TOL) -> LieFrame:
        point = _coords(point, self.manifold)
        pts = np.array([point])
        mat = self.matrices(pts)[0]
        s = np.linalg.svd(mat, compute_uv=False)
        rank = int(scaled_ranks(mat[None], self.bounds(pts), rank_tol)[0])
        return LieFrame(tuple(point), mat, s, rank, rank_tol)

    def exact_matrix(self, env: dict) -> list[list[Fraction]]:
        """Rows as exact rationals; only for rows free of pi and sin/cos/exp
        evaluated at rational points."""
        q = {k: Fraction(v) for k, v in env.items()}
        return [[exact_value(e, q) for e in row] for row in self.rows]

    def exact_rank(self, env: dict, dps: int = 50) -> int:
        """Rank in exact rational arithmetic when possible, otherwise by
        elimination at ``dps`` digits with pivots below ``10**(-dps/2)``
        (relative) treated as zero."""
        try:
            return exact_rank(self.exact_matrix(env))
        except (NotRationalError, TypeError, ValueError):
            pass
        with mpmath.workdps(dps):
            mp_env = {k: _to_mpf(v) for k, v in env.items()}
            rows = [[mp_value(e, mp_env) for e in row] for row in self.rows]
            return mp_rank(rows, mpmath.mpf(10) ** (-(dps // 2)))


def _to_mpf(v):
    if isinstance(v, mpmath.mpf):
        return v
    if isinstance(v, Fraction):
        return mpmath.mpf(v.numerator) / v.denominator
    return mpmath.mpf(v)


def mp_rank(rows, rel_tol) -> int:
    """Gaussian elimination with partial pivoting at the working precision."""
    mat = [list(r) for r in rows]
    if not mat:
        return 0
    scale = max((abs(v) for r in mat for v in r), default=0)
    if scale == 0:
        return 0
    n_rows, n_cols = len(mat), len(mat[0])
    rank = 0
    for col in range(n_cols):
        pivot = max(range(rank, n_rows), key=lambda r: abs(mat[r][col]), default=None)
        if pivot is None or abs(mat[pivot][col]) <= rel_tol * scale:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        for r in range(rank + 1, n_rows):
            f = mat[r][col] / mat[rank][col]
            for c in range(col, n_cols):
                mat[r][c] -= f * mat[rank][c]
        rank += 1
        if rank == n_rows:
            break
    return rank


def _coords(point, manifold: Manifold) -> list[float]:
    if isinstance(point, PhasePoint):
        c = list(point.coords)
        if manifold.has_time:
            c.append(point.t if point.t is not None else 0.0)
        return c
    c = [float(v) for v in point]
    if len(c) != len(manifold.variables):
        raise ValueError(f"point needs {len(manifold.variables)} coordinates")
    return c


def lie_frame(
    H1: Expr, H2: Expr, k: int, z, manifold: Manifold, rank_tol: float = DEFAULT_RANK_TOL
) -> LieFrame:
    """Lie frame of (H1, H2) with k rows at z; rank by thresholded SVD."""
    builder = FrameBuilder(H1, H2, k, manifold)
    try:
        return builder.frame(z, rank_tol)
    except DomainError:
        raise
    except (ZeroDivisionError, FloatingPointError) as exc:
        raise DomainError(str(exc)) from None


# -- grids -------------------------------------------------------------------

def grid_axes(manifold: Manifold, resolution: int, box=None, t_window=None) -> list[np.ndarray]:
    """Node coordinates per variable: ``j * period / R`` on circles,
    ``R`` evenly spaced nodes over the box on lines."""
    periods = manifold.period_values
    axes = []
    box_arr = None
    if box is not None:
        box_arr = np.asarray(box, dtype=float)
        if box_arr.shape == (2,):
            box_arr = np.tile(box_arr, (manifold.dim, 1))
    for i, P in enumerate(periods):
        if P > 0:
            axes.append(np.arange(resolution) * (P / resolution))
        elif box_arr is None:
            raise ValueError("non-compact manifold: a bounding box is required for grids")
        else:
            axes.append(np.linspace(box_arr[i][0], box_arr[i][1], resolution))
    if manifold.time == "circle":
        axes.append(np.arange(resolution) / resolution)
    elif manifold.time == "line":
        if t_window is None:
            raise ValueError("time line: a t window is required for grids")
        axes.append(np.linspace(t_window[0], t_window[1], resolution))
    return axes


def grid_points(axes: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass
class DegeneracyReport:
    k: int
    d: int
    rank_tol: float
    crit_tol: float
    resolution: int
    nodes_total: int
    regular_nodes: int
    failures: list[LieFrame]
    critical: list[LieFrame]
    sigma_min: float  # over regular nodes, absolute
    sigma_ratio_min: float  # smallest sigma_n / sigma_1 over regular nodes
    worst_node: tuple[float, ...] | None = None

    @property
    def failure_fraction(self) -> float:
        return len(self.failures) / self.regular_nodes if self.regular_nodes else 0.0

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "d": self.d,
            "rank_tol": self.rank_tol,
            "crit_tol": self.crit_tol,
            "resolution": self.resolution,
            "nodes_total": self.nodes_total,
            "regular_nodes": self.regular_nodes,
            "failure_fraction": self.failure_fraction,
            "sigma_min": self.sigma_min,
            "sigma_ratio_min": self.sigma_ratio_min,
            "failures": [f.as_dict() for f in self.failures],
            "critical": [f.as_dict() for f in self.critical],
        }


def grid_scan(
    H1: Expr,
    H2: Expr,
    k: int,
    manifold: Manifold,
    resolution: int = 64,
    rank_tol: float = DEFAULT_RANK_TOL,
    crit_tol: float = DEFAULT_CRIT_TOL,
    box=None,
    t_window=None,
    workers: int | None = None,
    builder: FrameBuilder | None = None,
) -> DegeneracyReport:
    """Evaluate the Lie frame at every grid node.

    Nodes with ``|d_z H1| < crit_tol`` are listed as critical and left out
    of the rank statistics; the others are rank-deficient when their rank
    is below the full dimension.
    """
    if not manifold.compact and box is None:
        raise ValueError("non-compact manifold: grid_scan needs a bounding box")
    builder = builder or FrameBuilder(H1, H2, k, manifold)
    pts = grid_points(grid_axes(manifold, resolution, box, t_window))
    target = builder.shape[1]

    def scan(rows: range):
        sub = pts[rows.start : rows.stop]
        mats = builder.matrices(sub)
        s = np.linalg.svd(mats, compute_uv=False)
        ranks = scaled_ranks(mats, builder.bounds(sub), rank_tol)
        gnorm = builder.grad_h1_norm(sub)
        return sub, mats, s, ranks, gnorm

    parts = map_chunks(scan, split(len(pts), worker_count(workers)), workers)
    failures, critical = [], []
    n_regular = 0
    sigma_min = math.inf
    ratio_min = math.inf
    worst = None
    for sub, mats, s, ranks, gnorm in parts:
        top = s[:, 0]
        smin = s[:, target - 1] if s.shape[1] >= target else np.zeros(len(sub))
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(top > 0, smin / top, 0.0)
        is_crit = gnorm < crit_tol
        for i in np.flatnonzero(is_crit):
            critical.append(LieFrame(tuple(sub[i]), mats[i], s[i], int(ranks[i]), rank_tol))
        regular = ~is_crit
        n_regular += int(regular.sum())
        for i in np.flatnonzero(regular & (ranks < target)):
            failures.append(LieFrame(tuple(sub[i]), mats[i], s[i], int(ranks[i]), rank_tol))
        if regular.any():
            sigma_min = min(sigma_min, float(smin[regular].min()))
            j = np.flatnonzero(regular)[np.argmin(ratio[regular])]
            if ratio[j] < ratio_min:
                ratio_min = float(ratio[j])
                worst = tuple(sub[j])
    return DegeneracyReport(
        k, manifold.d, rank_tol, crit_tol, resolution, len(pts), n_regular,
        failures, critical,
        sigma_min if n_regular else float("nan"),
        ratio_min if n_regular else float("nan"),
        worst,
    )


def grid_node_env(manifold: Manifold, resolution: int, index: Sequence[int], box=None, t_window=None) -> dict:
    """High-precision coordinates of the grid node with integer ``index``."""
    boxes = None
    if box is not None:
        boxes = np.asarray(box, dtype=float)
        if boxes.shape == (2,):
            boxes = np.tile(boxes, (manifold.dim, 1))
    env = {}
    for i, (name, j) in enumerate(zip(manifold.variables, index)):
        if name == "t":
            if manifold.time == "circle":
                env[name] = mpmath.mpf(j) / resolution
            else:
                lo, hi = map(mpmath.mpf, t_window)
                env[name] = lo + (hi - lo) * j / (resolution - 1)
            continue
        P = manifold.periods[i]
        if P is None:
            if boxes is None:
                raise ValueError("non-compact manifold: a bounding box is required")
            lo, hi = map(mpmath.mpf, boxes[i])
            env[name] = lo + (hi - lo) * j / (resolution - 1)
        else:
            env[name] = mp_value(P, {}) * j / resolution
    return env


def spot_check(
    builder: FrameBuilder,
    resolution: int,
    indices: Sequence[Sequence[int]],
    rank_tol: float = DEFAULT_RANK_TOL,
    dps: int = 50,
    box=None,
    t_window=None,
) -> list[dict]:
    """Compare thresholded-SVD rank to exact rank at the given grid nodes."""
    out = []
    m = builder.manifold
    for idx in indices:
        with mpmath.workdps(dps):
            env = grid_node_env(m, resolution, idx, box, t_window)
            point = [float(env[v]) for v in m.variables]
        svd_rank = builder.frame(point, rank_tol).rank
        exact = builder.exact_rank(env, dps)
        out.append({"index": list(idx), "point": point, "svd_rank": svd_rank, "exact_rank": exact})
    return out


# -- critical points of H1 ------------------------------------------------------

@dataclass
class CriticalPoint:
    point: tuple[float, ...]
    grad_norm: float
    hessian_det: float
    nondegenerate: bool

    def as_dict(self) -> dict:
        return {
            "point": list(self.point),
            "grad_norm": self.grad_norm,
            "hessian_det": self.hessian_det,
            "nondegenerate": self.nondegenerate,
        }


@dataclass
class H1Report:
    status: str  # "satisfied" | "violated" | "inconclusive"
    critical_points: list[CriticalPoint]
    isolated: bool
    min_separation: float
    grid_spacing: float
    unconverged: int
    resolution: int
    notes: list[str] = field(default_factory=list)

    @property
    def satisfied(self) -> bool:
        return self.status == "satisfied"

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "count": len(self.critical_points),
            "critical": [c.as_dict() for c in self.critical_points],
            "isolated": self.isolated,
            "min_separation": self.min_separation,
            "grid_spacing": self.grid_spacing,
            "unconverged": self.unconverged,
            "resolution": self.resolution,
            "notes": list(self.notes),
        }


def _local_minima(g: np.ndarray, periodic: Sequence[bool]) -> np.ndarray:
    """Boolean mask of nodes not larger than any of their neighbours."""
    mask = np.ones(g.shape, dtype=bool)
    for shift in product((-1, 0, 1), repeat=g.ndim):
        if not any(shift):
            continue
        nb = g
        for ax, s in enumerate(shift):
            if s == 0:
                continue
            if periodic[ax]:
                nb = np.roll(nb, s, axis=ax)
            else:
                pad = [(0, 0)] * g.ndim
                pad[ax] = (1, 0) if s > 0 else (0, 1)
                nb = np.pad(nb, pad, constant_values=np.inf)
                sl = [slice(None)] * g.ndim
                sl[ax] = slice(0, -1) if s > 0 else slice(1, None)
                nb = nb[tuple(sl)]
        mask &= g <= nb
    return mask


def check_assumption_h1(
    H1: Expr,
    manifold: Manifold,
    resolution: int = 64,
    crit_tol: float = DEFAULT_CRIT_TOL,
    box=None,
    max_iter: int = 50,
) -> H1Report:
    """Locate critical points of H1 and certify the non-degeneracy assumption.

    Grid local minima of ``|dH1|^2`` are refined by Newton's method (least
    squares on the Hessian, steps capped at one grid spacing).  The
    assumption is certified when every critical point found has a
    non-singular Hessian, which makes it isolated.  Refined points at grid
    neighbour distance mark a critical curve: a violation for d = 1,
    inconclusive for d >= 2.
    """
    if manifold.has_time:
        manifold = manifold.autonomous()
    if not manifold.compact and box is None:
        raise ValueError("non-compact manifold: check_assumption_h1 needs a bounding box")
    names = manifold.coordinate_names
    dim = manifold.dim
    grad = [diff(H1, v) for v in names]
    hess = [[diff(g, v) for v in names] for g in grad]
    grad_f = numpy_function(grad, names)
    hess_f = numpy_function([e for row in hess for e in row], names)

    axes = grid_axes(manifold, resolution, box)
    spacing = max(float(a[1] - a[0]) for a in axes)
    pts = grid_points(axes)
    G = grad_f(*pts.T)
    g2 = np.sum(G**2, axis=0).reshape((resolution,) * dim)
    Hs = hess_f(*pts.T).T.reshape(-1, dim, dim)
    lipschitz = float(np.max(np.linalg.norm(Hs, ord=2, axis=(1, 2)))) if len(Hs) else 0.0
    periodic = [P > 0 for P in manifold.period_values]
    candidates = np.flatnonzero(_local_minima(g2, periodic).ravel())
    threshold = (2.0 * lipschitz * spacing * math.sqrt(dim)) ** 2 + crit_tol**2
    candidates = [i for i in candidates if g2.ravel()[i] <= threshold]

    found: list[np.ndarray] = []
    unconverged = 0
    for i in candidates:
        z = pts[i].copy()
        ok = False
        for _ in range(max_iter):
            gz = grad_f(*z).ravel()
            if np.linalg.norm(gz) < min(crit_tol, 1e-12):
                ok = True
                break
            Hz = hess_f(*z).reshape(dim, dim)
            step = np.linalg.lstsq(Hz, gz, rcond=None)[0]
            n = np.linalg.norm(step)
            if n > spacing:
                step *= spacing / n
            z = z - step
            if n < 1e-15:
                break
        z = manifold.reduce(z)
        if not ok and np.linalg.norm(grad_f(*z).ravel()) < crit_tol:
            ok = True
        if not ok:
            unconverged += 1
            continue
        if all(manifold.distance(z, w) > spacing / 2 for w in found):
            found.append(z)

    crit = []
    for z in found:
        Hz = hess_f(*z).reshape(dim, dim)
        det = float(np.linalg.det(Hz))
        scale = max(1.0, float(np.linalg.norm(Hz, ord=2))) ** dim
        crit.append(
            CriticalPoint(tuple(float(v) for v in z), float(np.linalg.norm(grad_f(*z))), det, abs(det) > 1e-8 * scale)
        )
    seps = [manifold.distance(a, b) for a, b in combinations(found, 2)]
    min_sep = min(seps) if seps else math.inf
    # refined points one grid step apart trace a critical curve or sheet
    adjacent = 1.5 * spacing
    isolated = min_sep > adjacent
    notes = []
    if not crit:
        status = "satisfied"
        notes.append("no critical points found: the critical set is empty on the scanned region")
    elif all(c.nondegenerate for c in crit) and isolated:
        # non-degenerate critical points are isolated
        status = "satisfied"
    elif not isolated and manifold.d == 1:
        status = "violated"
        notes.append("critical points are not isolated: critical set of codimension 1")
    else:
        status = "inconclusive"
        notes.append("critical set is not certified as a finite set of non-degenerate points")
    if unconverged:
        notes.append(f"{unconverged} refinement(s) did not converge")
    return H1Report(status, crit, isolated, min_sep, spacing, unconverged, resolution, notes)


# -- escape from the critical set -------------------------------------------------

@dataclass
class EscapeReport:
    point: tuple[float, ...]
    field_norm: float
    hypothesis_holds: bool
    escape_time: float | None
    horizon: float

    def as_dict(self) -> dict:
        return {
            "point": list(self.point),
            "field_norm": self.field_norm,
            "hypothesis_holds": self.hypothesis_holds,
            "escape_time": self.escape_time,
            "horizon": self.horizon,
        }


def escape_check(
    H1: Expr,
    H2: Expr,
    z0,
    manifold: Manifold,
    horizon: float = 1e-3,
    crit_tol: float = DEFAULT_CRIT_TOL,
    samples: int = 100,
) -> EscapeReport:
    """Follow the H2 flow from a critical point of H1 until ``|dH1|`` exceeds
    ``crit_tol``.  With an isolated critical set the transversality
    hypothesis reads ``X_H2(z0) != 0``."""
    if manifold.has_time:
        raise ValueError("escape_check is defined for autonomous Hamiltonians")
    z0 = z0 if isinstance(z0, PhasePoint) else PhasePoint.on(manifold, z0)
    names = manifold.coordinate_names
    grad_h1 = numpy_function([diff(H1, v) for v in names], names)
    if np.linalg.norm(grad_h1(*z0.coords)) >= crit_tol:
        raise ValueError("z0 is not a critical point of H1")
    field2 = VectorField(H2, manifold)
    fnorm = float(np.linalg.norm(field2(z0)))
    if fnorm < crit_tol:
        return EscapeReport(z0.coords, fnorm, False, None, horizon)
    dt = horizon / samples
    stepper = _Stepper(field2, dt, 1e-15, 50)
    z = list(z0.coords)
    escape = None
    for j in range(1, samples + 1):
        z = stepper.reduce(stepper.step(z, 0.0, dt))
        if np.linalg.norm(grad_h1(*z)) > crit_tol:
            escape = j * dt
            break
    return EscapeReport(z0.coords, fnorm, True, escape, horizon)


# -- codimension bookkeeping ------------------------------------------------------

class Codimensions(NamedTuple):
    w_prime: int
    w0_lower: int
    k_min: int


def codim_formulas(k: int, d: int, autonomous: bool = True) -> Codimensions:
    """Codimensions in the jet space of the rank-deficiency set and of the
    bad-critical-point set, and the smallest admissible k.

    Autonomous: ``(k - 2d + 1, 2d + 2, 4d)``.  Time-dependent:
    ``(k - 2d, 2d + 2, 4d + 1)``.  Below ``k = 2d`` (resp. ``2d + 1``) the
    rank condition fails on every jet and the codimension is 0.
    """
    if k < 2 or d < 1:
        raise ValueError("need k >= 2 and d >= 1")
    dim_n = 2 * d
    if autonomous:
        return Codimensions(max(k - dim_n + 1, 0), dim_n + 2, 2 * dim_n)
    return Codimensions(max(k - dim_n, 0), (dim_n + 1) + 1, 2 * dim_n + 1)
