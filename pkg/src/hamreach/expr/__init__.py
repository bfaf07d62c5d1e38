"""Symbolic Hamiltonians: parsing, exact calculus, fast evaluation."""
from .calculus import (
    DomainError,
    NotRationalError,
    diff,
    diff_n,
    evaluate,
    exact_value,
    gradient,
    mp_value,
    mpf_to_fraction,
    numpy_function,
    scalar_function,
    to_source,
    vector_function,
)
from .manifold import Manifold, PhasePoint, pi_monomial
from .nodes import (
    MINUS_ONE,
    ONE,
    PI,
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
    as_expr,
    cos,
    div,
    exp,
    free_vars,
    func,
    mul,
    neg,
    power,
    simplify,
    sin,
    size,
    sub,
    substitute,
    to_text,
)
from .parser import ParseError, PeriodicityError, check_periodic, parse, parse_constant, parse_raw

__all__ = [name for name in dir() if not name.startswith("_")]
