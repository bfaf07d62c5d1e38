"""Poisson brackets and iterated bracket chains.

Sign convention, used throughout the package::

    {F, G} = sum_i dF/dp_i * dG/dx_i - dF/dx_i * dG/dp_i
    X_H    = (dH/dp, -dH/dx)

so that ``{p1, G} = dG/dx1`` and ``X_{F,G} = [X_F, X_G]`` with
``[X, Y] = DY.X - DX.Y``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .expr import ExprError, Manifold, Var, add, diff, free_vars, mul, parse, simplify, substitute
from .expr.nodes import Const, Expr


class ManifoldMismatch(ExprError):
    pass


def _check_on(manifold: Manifold, *exprs: Expr) -> None:
    allowed = set(manifold.variables)
    for e in exprs:
        extra = free_vars(e) - allowed
        if extra:
            raise ManifoldMismatch(
                f"{e} uses {sorted(extra)}, not coordinates of a {manifold.dim}-dimensional manifold"
            )


def bracket(F: Expr, G: Expr, manifold: Manifold) -> Expr:
    """Poisson bracket in the symplectic variables; ``t`` is a parameter."""
    _check_on(manifold, F, G)
    F, G = simplify(F), simplify(G)
    terms = []
    for i in range(1, manifold.d + 1):
        x, p = f"x{i}", f"p{i}"
        terms.append(mul(diff(F, p), diff(G, x)))
        terms.append(mul(Const(-1), diff(F, x), diff(G, p)))
    return add(*terms)


@dataclass(frozen=True)
class BracketChain:
    """``entries[0] = H2`` and ``entries[j] = {H1, entries[j-1]}``."""

    h1: Expr
    h2: Expr
    entries: tuple[Expr, ...]

    @property
    def m(self) -> int:
        return len(self.entries) - 1

    def __getitem__(self, j: int) -> Expr:
        return self.entries[j]

    def __len__(self) -> int:
        return len(self.entries)


def chain(H1: Expr, H2: Expr, m: int, manifold: Manifold) -> BracketChain:
    if m < 0:
        raise ValueError("chain length must be non-negative")
    entries = [simplify(H2)]
    for _ in range(m):
        entries.append(bracket(H1, entries[-1], manifold))
    return BracketChain(simplify(H1), entries[0], tuple(entries))


# -- time-dependent Hamiltonians on N x R -----------------------------------

def _require_time(manifold: Manifold) -> None:
    if not manifold.has_time:
        raise ManifoldMismatch("extended brackets need a manifold with a time factor")


def extended_brackets(H1: Expr, H2: Expr, m: int, manifold: Manifold, time_sign: int = 1) -> list[Expr]:
    """Generators ``K_1..K_m`` of the iterated brackets of the extended fields.

    With extended fields ``(X_{H_i}, s)``, ``s = time_sign``, one has
    ``[X~1, X~2] = (X_{K_1}, 0)`` and ``[X~1, (X_K, 0)] = (X_{{H1,K} + s dK/dt}, 0)``,
    hence::

        K_1     = {H1, H2} + s (dH2/dt - dH1/dt)
        K_{j+1} = {H1, K_j} + s dK_j/dt

    ``time_sign=+1`` matches the flows integrated by ``hamreach.flow``.
    """
    _require_time(manifold)
    if m < 1:
        raise ValueError("extended chain needs m >= 1")
    if time_sign not in (1, -1):
        raise ValueError("time_sign must be +1 or -1")
    s = Const(time_sign)
    _check_on(manifold, H1, H2)
    H1, H2 = simplify(H1), simplify(H2)
    K = add(bracket(H1, H2, manifold), mul(s, diff(H2, "t")), mul(s, Const(-1), diff(H1, "t")))
    out = [K]
    for _ in range(m - 1):
        K = add(bracket(H1, K, manifold), mul(s, diff(K, "t")))
        out.append(K)
    return out


def _time_value(t0) -> Fraction:
    if isinstance(t0, Const):
        return t0.value
    if isinstance(t0, float):
        return Fraction(repr(t0))
    return Fraction(t0)


def extended_chain(
    H1: Expr, H2: Expr, m: int, t0, manifold: Manifold, time_sign: int = 1
) -> list[Expr]:
    """``[K_1, ..., K_m]`` restricted to ``t = t0`` (functions of ``z`` only)."""
    t0 = _time_value(t0)
    return [substitute(K, {"t": Const(t0)}) for K in extended_brackets(H1, H2, m, manifold, time_sign)]


def flowbox_k(H1: Expr, H2: Expr, m: int, t0, manifold: Manifold) -> Expr:
    """Closed form ``(d_x1 - d_t)^m H2 + (d_x1 - d_t)^(m-1) d_t H1`` at ``t0``.

    Valid as the bracket generator (``time_sign=-1``) when ``H1(., t0) = p1``
    and the t-derivatives of ``H1 - p1`` up to order m vanish at ``t0``
    except for purely time-dependent terms.
    """
    _require_time(manifold)
    if m < 1:
        raise ValueError("m must be >= 1")
    t0 = _time_value(t0)
    at_t0 = substitute(H1, {"t": Const(t0)})
    if at_t0 != Var("p1"):
        raise ValueError(f"H1(., t0) must equal p1, got {at_t0}")

    def D(e: Expr) -> Expr:
        return add(diff(e, "x1"), mul(Const(-1), diff(e, "t")))

    first = simplify(H2)
    for _ in range(m):
        first = D(first)
    second = diff(H1, "t")
    for _ in range(m - 1):
        second = D(second)
    return substitute(add(first, second), {"t": Const(t0)})


def parse_pair(h1: str, h2: str, manifold: Manifold) -> tuple[Expr, Expr]:
    return parse(h1, manifold), parse(h2, manifold)
