"""Compiled (numba) kernels for batched switched-flow simulation.

The kernel runs many schedules from one start point and marks the
occupancy grid as it goes.  It mirrors the implicit midpoint stepping of
``hamreach.flow`` operation for operation.
"""
from __future__ import annotations

import math
import threading
from functools import lru_cache

import numba
import numpy as np

from .expr import Expr, Manifold
from .expr.calculus import to_source
from .flow import field_expressions

_lock = threading.Lock()

STATUS_OK = 0
STATUS_NO_CONVERGENCE = 1

_FIELD_TEMPLATE = """
def vf(z, t, out):
{unpack}
{body}
"""

_KERNEL_SOURCE = """
def kernel(z0, t0, fields, durs, offsets, starts, h, tol, max_iter,
           periods, sample_every, cell_scale, cell_lo, t_period,
           counts, first, res):
    dim = z0.shape[0]
    n_axes = res.shape[0]
    z = np.empty(dim)
    zn = np.empty(dim)
    mid = np.empty(dim)
    k = np.empty(dim)
    new = np.empty(dim)
    idx = np.empty(n_axes, dtype=np.int64)
    n_sched = offsets.shape[0] - 1
    for s in range(n_sched):
        elapsed = starts[s]
        for i in range(dim):
            z[i] = z0[i]
        t = t0
        mark(z, t, elapsed, cell_scale, cell_lo, t_period, counts, first, res, idx)
        for leg in range(offsets[s], offsets[s + 1]):
            T = durs[leg]
            if T == 0.0:
                continue
            which = fields[leg]
            sgn = 1.0 if T > 0 else -1.0
            n = max(1, math.ceil(abs(T) / h - 1e-9))
            short = abs(T) - (n - 1) * h
            done = 0.0
            for j in range(n):
                if sgn > 0:
                    size = h if j < n - 1 else short
                else:
                    size = short if j == 0 else h
                dt = sgn * size
                ts = t + sgn * done + dt / 2
                # implicit midpoint, fixed-point solve
                if which == 1:
                    vf1(z, ts, k)
                else:
                    vf2(z, ts, k)
                zmax = 0.0
                for i in range(dim):
                    zn[i] = z[i] + dt * k[i]
                    if abs(z[i]) > zmax:
                        zmax = abs(z[i])
                scale = tol * (1.0 + zmax)
                ok = False
                for _ in range(max_iter):
                    for i in range(dim):
                        mid[i] = (z[i] + zn[i]) * 0.5
                    if which == 1:
                        vf1(mid, ts, k)
                    else:
                        vf2(mid, ts, k)
                    err = 0.0
                    for i in range(dim):
                        new[i] = z[i] + dt * k[i]
                        e = abs(new[i] - zn[i])
                        if e > err:
                            err = e
                        zn[i] = new[i]
                    if err <= scale:
                        ok = True
                        break
                if not ok:
                    return STATUS_NO_CONVERGENCE
                for i in range(dim):
                    P = periods[i]
                    v = zn[i]
                    if P > 0.0:
                        v = v % P
                        if v >= P:
                            v -= P
                    z[i] = v
                if j < n - 1:
                    done += size
                else:
                    done = abs(T)
                if (j + 1) % sample_every == 0 and j < n - 1:
                    mark(z, t + sgn * done, elapsed + done,
                         cell_scale, cell_lo, t_period, counts, first, res, idx)
            t = t + T
            elapsed += abs(T)
            mark(z, t, elapsed, cell_scale, cell_lo, t_period, counts, first, res, idx)
    return STATUS_OK
"""


def _mark(z, t, when, cell_scale, cell_lo, t_period, counts, first, res, idx):
    dim = z.shape[0]
    n_axes = res.shape[0]
    for i in range(n_axes):
        if i < dim:
            v = z[i]
        else:
            v = t
            if t_period > 0.0:
                v = v % t_period
        c = math.floor((v - cell_lo[i]) * cell_scale[i])
        if c < 0 or c >= res[i]:
            if i < dim:
                c = min(max(c, 0), res[i] - 1)
            else:
                return
        idx[i] = c
    flat = 0
    for i in range(n_axes):
        flat = flat * res[i] + idx[i]
    counts[flat] += 1
    if when < first[flat]:
        first[flat] = when


_mark_jit = numba.njit(cache=False)(_mark)


def _field_source(H: Expr, manifold: Manifold) -> str:
    exprs = field_expressions(H, manifold)
    unpack = "\n".join(f"    {name} = z[{i}]" for i, name in enumerate(manifold.coordinate_names))
    if not manifold.has_time:
        unpack += "\n    t_unused = t"
    body = "\n".join(f"    out[{i}] = {to_source(e)}" for i, e in enumerate(exprs))
    return _FIELD_TEMPLATE.format(unpack=unpack, body=body)


def _compile_field(H: Expr, manifold: Manifold):
    ns = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "PI": math.pi, "math": math}
    exec(compile(_field_source(H, manifold), "<hamreach:vf>", "exec"), ns)
    return numba.njit(ns["vf"])


@lru_cache(maxsize=64)
def _kernel_for(H1: Expr, H2: Expr, manifold: Manifold):
    ns = {
        "np": np,
        "math": math,
        "vf1": _compile_field(H1, manifold),
        "vf2": _compile_field(H2, manifold),
        "mark": _mark_jit,
        "STATUS_OK": STATUS_OK,
        "STATUS_NO_CONVERGENCE": STATUS_NO_CONVERGENCE,
    }
    exec(compile(_KERNEL_SOURCE, "<hamreach:kernel>", "exec"), ns)
    return numba.njit(nogil=True)(ns["kernel"])


def schedule_kernel(H1: Expr, H2: Expr, manifold: Manifold):
    """Compiled kernel for the pair, built once per (H1, H2, manifold)."""
    with _lock:
        return _kernel_for(H1, H2, manifold)


def pack_schedules(schedules) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    fields, durs, offsets = [], [], [0]
    for s in schedules:
        for i, T in s.legs:
            fields.append(i)
            durs.append(T)
        offsets.append(len(fields))
    return (
        np.asarray(fields, dtype=np.int64),
        np.asarray(durs, dtype=np.float64),
        np.asarray(offsets, dtype=np.int64),
    )
