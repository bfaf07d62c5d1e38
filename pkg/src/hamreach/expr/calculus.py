"""Differentiation and evaluation of expressions.

Numerical evaluation goes through generated Python source, compiled once
per expression and cached; the same source feeds the numpy and numba
backends, so every backend evaluates the tree in the same fixed order.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import mpmath
import numpy as np

from .manifold import PhasePoint
from .nodes import (
    ONE,
    ZERO,
    Add,
    Const,
    Div,
    Expr,
    ExprError,
    Func,
    Mul,
    Neg,
    Pi,
    Pow,
    Sub,
    Var,
    add,
    func,
    mul,
    power,
    simplify,
)


class DomainError(ArithmeticError):
    """Evaluation hit a point outside the expression's domain."""


class NotRationalError(ExprError):
    """Exact evaluation met pi or a transcendental function."""


# -- differentiation ----------------------------------------------------------

def diff(e: Expr, v: str | Var) -> Expr:
    """Exact partial derivative of ``e`` with respect to variable ``v``."""
    name = v.name if isinstance(v, Var) else v
    return _diff(simplify(e), name)


@lru_cache(maxsize=200_000)
def _diff(e: Expr, v: str) -> Expr:
    if isinstance(e, (Const, Pi)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == v else ZERO
    if isinstance(e, Add):
        return add(*(_diff(a, v) for a in e.args))
    if isinstance(e, Mul):
        terms = []
        for i, a in enumerate(e.args):
            da = _diff(a, v)
            if da != ZERO:
                terms.append(mul(*e.args[:i], da, *e.args[i + 1 :]))
        return add(*terms)
    if isinstance(e, Pow):
        db = _diff(e.base, v)
        if db == ZERO:
            return ZERO
        return mul(Const(e.exp), power(e.base, e.exp - 1), db)
    if isinstance(e, Func):
        da = _diff(e.arg, v)
        if da == ZERO:
            return ZERO
        if e.name == "sin":
            return mul(func("cos", e.arg), da)
        if e.name == "cos":
            return mul(Const(-1), func("sin", e.arg), da)
        return mul(e, da)
    raise TypeError(f"not a normalized expression: {e!r}")


def diff_n(e: Expr, v: str, n: int) -> Expr:
    for _ in range(n):
        e = diff(e, v)
    return e


def gradient(e: Expr, variables: Sequence[str]) -> list[Expr]:
    return [diff(e, v) for v in variables]


# -- code generation ------------------------------------------------------------

def to_source(e: Expr) -> str:
    """Python source for ``e``; free names are the variable names plus
    ``sin``, ``cos``, ``exp`` and ``PI`` supplied by the caller's namespace."""
    if isinstance(e, Const):
        return repr(float(e.value)) if e.value >= 0 else f"({float(e.value)!r})"
    if isinstance(e, Pi):
        return "PI"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        return "(" + " + ".join(to_source(a) for a in e.args) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(to_source(a) for a in e.args) + ")"
    if isinstance(e, Pow):
        if e.exp > 0:
            return f"({to_source(e.base)} ** {e.exp})"
        return f"(1.0 / ({to_source(e.base)} ** {-e.exp}))"
    if isinstance(e, Func):
        return f"{e.name}({to_source(e.arg)})"
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    if isinstance(e, Sub):
        return f"({to_source(e.left)} - {to_source(e.right)})"
    if isinstance(e, Div):
        return f"({to_source(e.num)} / {to_source(e.den)})"
    raise TypeError(f"not an expression: {e!r}")


def majorant_source(e: Expr) -> str:
    """Source for an upper bound of the absolute values met while
    evaluating ``e``: every sum is replaced by the sum of absolute values.
    Comparing a computed value with this bound tells cancellation to
    roundoff apart from a genuinely small value."""
    if isinstance(e, Const):
        return repr(abs(float(e.value)))
    if isinstance(e, Pi):
        return "PI"
    if isinstance(e, Var):
        return f"abs({e.name})"
    if isinstance(e, (Add, Mul)):
        op = " + " if isinstance(e, Add) else " * "
        return "(" + op.join(majorant_source(a) for a in e.args) + ")"
    if isinstance(e, Pow):
        if e.exp > 0:
            return f"({majorant_source(e.base)} ** {e.exp})"
        return f"(1.0 / (abs({to_source(e.base)}) ** {-e.exp}))"
    if isinstance(e, Func):
        if e.name == "exp":
            return f"exp({to_source(e.arg)})"
        return "1.0"
    if isinstance(e, Neg):
        return majorant_source(e.arg)
    if isinstance(e, Sub):
        return f"({majorant_source(e.left)} + {majorant_source(e.right)})"
    if isinstance(e, Div):
        return f"({majorant_source(e.num)} / abs({to_source(e.den)}))"
    raise TypeError(f"not an expression: {e!r}")


_MATH_NS = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "PI": math.pi}
_NUMPY_NS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "PI": np.pi, "abs": np.abs}


def _build(src_body: str, args: Sequence[str], namespace: dict, name: str = "f"):
    src = f"def {name}({', '.join(args)}):\n    return {src_body}\n"
    ns = dict(namespace)
    exec(compile(src, f"<hamreach:{name}>", "exec"), ns)
    fn = ns[name]
    fn.source = src
    return fn


@lru_cache(maxsize=20_000)
def scalar_function(e: Expr, variables: tuple[str, ...]):
    """Compile ``e`` into ``f(*values)`` over floats (math module)."""
    return _build(to_source(e), variables, _MATH_NS)


@lru_cache(maxsize=4_096)
def vector_function(exprs: tuple[Expr, ...], variables: tuple[str, ...]):
    """Compile a tuple of expressions into ``f(*values) -> tuple``."""
    body = "(" + ", ".join(to_source(e) for e in exprs) + ",)"
    return _build(body, variables, _MATH_NS)


@lru_cache(maxsize=4_096)
def _numpy_function(exprs: tuple[Expr, ...], variables: tuple[str, ...]):
    body = "(" + ", ".join(to_source(e) for e in exprs) + ",)"
    return _build(body, variables, _NUMPY_NS)


@lru_cache(maxsize=1_024)
def _numpy_majorant(exprs: tuple[Expr, ...], variables: tuple[str, ...]):
    body = "(" + ", ".join(majorant_source(e) for e in exprs) + ",)"
    return _build(body, variables, _NUMPY_NS)


def numpy_function(exprs: Sequence[Expr], variables: Sequence[str], majorant: bool = False):
    """Vectorized evaluator: ``f(*arrays) -> ndarray (len(exprs), *shape)``.

    With ``majorant`` the evaluator returns the bounds of
    ``majorant_source`` instead of the values."""
    build = _numpy_majorant if majorant else _numpy_function
    raw = build(tuple(exprs), tuple(variables))

    def f(*arrays):
        arrays = [np.asarray(a, dtype=float) for a in arrays]
        shape = np.broadcast_shapes(*(a.shape for a in arrays)) if arrays else ()
        with np.errstate(divide="raise", invalid="raise"):
            try:
                values = raw(*arrays)
            except (FloatingPointError, ZeroDivisionError) as exc:
                raise DomainError(str(exc)) from None
        return np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in values])

    return f


def _env_values(z, variables: Sequence[str]) -> list[float]:
    if isinstance(z, PhasePoint):
        env = z.env()
    elif isinstance(z, Mapping):
        env = z
    else:
        vals = list(z)
        if len(vals) != len(variables):
            raise ValueError(f"expected {len(variables)} coordinates, got {len(vals)}")
        return [float(v) for v in vals]
    try:
        return [float(env[v]) for v in variables]
    except KeyError as exc:
        raise ValueError(f"point does not provide variable {exc.args[0]}") from None


def point_variables(z, e: Expr) -> tuple[str, ...]:
    from .nodes import free_vars, var_sort_key

    if isinstance(z, PhasePoint):
        return tuple(z.env())
    if isinstance(z, Mapping):
        return tuple(sorted(z, key=var_sort_key))
    return tuple(sorted(free_vars(e), key=var_sort_key))


def evaluate(e: Expr, z) -> float:
    """Value of ``e`` at ``z`` (a PhasePoint or a name -> value mapping).

    Raises DomainError on division by zero or out-of-range math calls.
    """
    variables = point_variables(z, e)
    values = _env_values(z, variables)
    f = scalar_function(e, variables)
    try:
        return f(*values)
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise DomainError(f"cannot evaluate {e} at {dict(zip(variables, values))}: {exc}") from None


# -- exact and high-precision evaluation ---------------------------------------

def exact_value(e: Expr, env: Mapping[str, Fraction]) -> Fraction:
    """Exact rational value; only for expressions without pi or functions."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return Fraction(env[e.name])
    if isinstance(e, (Pi, Func)):
        raise NotRationalError(f"{e} has no exact rational value")
    if isinstance(e, Add):
        return sum((exact_value(a, env) for a in e.args), Fraction(0))
    if isinstance(e, Mul):
        out = Fraction(1)
        for a in e.args:
            out *= exact_value(a, env)
        return out
    if isinstance(e, Pow):
        b = exact_value(e.base, env)
        if b == 0 and e.exp < 0:
            raise DomainError("division by zero")
        return b ** e.exp
    return exact_value(simplify(e), env)


def mp_value(e: Expr, env: Mapping[str, "mpmath.mpf"]):
    """Value under the current mpmath precision."""
    if isinstance(e, Const):
        return mpmath.mpf(e.value.numerator) / e.value.denominator
    if isinstance(e, Pi):
        return +mpmath.pi
    if isinstance(e, Var):
        return mpmath.mpf(env[e.name])
    if isinstance(e, Add):
        return mpmath.fsum(mp_value(a, env) for a in e.args)
    if isinstance(e, Mul):
        out = mpmath.mpf(1)
        for a in e.args:
            out *= mp_value(a, env)
        return out
    if isinstance(e, Pow):
        return mp_value(e.base, env) ** e.exp
    if isinstance(e, Func):
        return getattr(mpmath, e.name)(mp_value(e.arg, env))
    return mp_value(simplify(e), env)


def mpf_to_fraction(v) -> Fraction:
    man, exp_ = mpmath.mpf(v).man_exp
    return Fraction(int(man)) * (Fraction(2) ** int(exp_))
