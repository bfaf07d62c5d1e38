"""Recursive-descent parser for Hamiltonian expressions.

Grammar::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("+" | "-") unary | power
    power   := atom (("^" | "**") unary)?
    atom    := NUMBER | "pi" | IDENT | FUNC "(" expr ")" | "(" expr ")"
    IDENT   := x1..xd | p1..pd | t
    FUNC    := sin | cos | exp

Numbers are decimal literals (``2``, ``0.25``, ``1e-3``) read exactly as
rationals; ``3/4`` is an ordinary division and folds to a rational.
"""
from __future__ import annotations

import re
from fractions import Fraction

from .manifold import Manifold, pi_monomial
from .nodes import (
    FUNCTIONS,
    PI,
    Add,
    Const,
    Div,
    Expr,
    ExprError,
    Func,
    Mul,
    Neg,
    Pow,
    Sub,
    Var,
    _split_coef,
    children,
    simplify,
)


class ParseError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class PeriodicityError(ExprError):
    """A circle coordinate is used in a non-periodic way."""


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>\*\*|[-+*/^(),]))"
)
_COORD = re.compile(r"([xp])(\d+)$")


def _tokenize(src: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {src[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str, variables: set[str] | None):
        self.tokens = _tokenize(src)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value:
            raise ParseError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", pos)
        return e

    def expr(self) -> Expr:
        terms = [self.term()]
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            if op == "+":
                terms.append(rhs)
            else:
                left = terms[0] if len(terms) == 1 else Add(terms)
                terms = [Sub(left, rhs)]
        return terms[0] if len(terms) == 1 else Add(terms)

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op, pos = self.take()[1], self.peek()[2]
            rhs = self.unary()
            if op == "*":
                e = Mul((e, rhs))
            else:
                if isinstance(rhs, Const) and rhs.value == 0:
                    raise ParseError("division by the constant zero", pos)
                e = Div(e, rhs)
        return e

    def unary(self) -> Expr:
        op = self.peek()[1]
        if op == "-":
            self.take()
            return Neg(self.unary())
        if op == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[1] in ("^", "**"):
            pos = self.take()[2]
            exponent = simplify(self.unary())
            if not isinstance(exponent, Const) or exponent.value.denominator != 1:
                raise ParseError("exponent must be an integer constant", pos)
            return Pow(base, int(exponent.value))
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return Const(Fraction(text))
        if kind == "name":
            if text == "pi":
                return PI
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(text, arg)
            self.check_identifier(text, pos)
            return Var(text)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected {text or 'end of input'!r}", pos)

    def check_identifier(self, name: str, pos: int):
        if self.variables is None:
            if name == "t" or _COORD.match(name):
                return
            raise ParseError(f"unknown identifier {name!r}", pos)
        if name in self.variables:
            return
        m = _COORD.match(name)
        if m:
            raise ParseError(f"variable index out of range in {name!r}", pos)
        if name == "t":
            raise ParseError("time variable 't' used on a manifold without time factor", pos)
        raise ParseError(f"unknown identifier {name!r}", pos)


def parse_raw(source: str, manifold: Manifold | None = None) -> Expr:
    """Parse without simplification or periodicity checks."""
    variables = set(manifold.variables) if manifold is not None else None
    return _Parser(source, variables).parse()


def parse(source: str, manifold: Manifold | None = None) -> Expr:
    """Parse ``source`` into a simplified expression valid on ``manifold``.

    Without a manifold any ``x<i>``, ``p<i>`` and ``t`` are accepted and
    no periodicity check is made.
    """
    e = simplify(parse_raw(source, manifold))
    if manifold is not None:
        check_periodic(e, manifold)
    return e


def parse_constant(source: str) -> Expr:
    e = simplify(_Parser(source, set()).parse())
    if pi_monomial(e) is None and not isinstance(e, Const):
        raise ExprError(f"not a constant of the form q*pi^k: {source!r}")
    return e


def check_periodic(e: Expr, manifold: Manifold) -> None:
    """Reject any circle coordinate not entering through sin/cos of
    ``n * (2*pi/period) * coordinate + phase`` with integer ``n``."""
    circles = manifold.circle_periods()
    if circles:
        _walk(simplify(e), circles)


def _walk(e: Expr, circles) -> None:
    if isinstance(e, Var):
        if e.name in circles:
            raise PeriodicityError(f"non-periodic dependence on circle coordinate {e.name}")
        return
    if isinstance(e, Func) and e.name in ("sin", "cos"):
        _check_argument(e.arg, circles)
        return
    for c in children(e):
        _walk(c, circles)


def _linear_part(mono: Expr, circles):
    """Return (variable, pi power) if mono is pi**k * circle variable."""
    factors = mono.args if isinstance(mono, Mul) else (mono,)
    var = None
    k = 0
    for f in factors:
        if isinstance(f, Var) and f.name in circles and var is None:
            var = f.name
            continue
        m = pi_monomial(f)
        if m is None or m[0] != 1:
            return None
        k += m[1]
    return (var, k) if var is not None else None


def _check_argument(arg: Expr, circles) -> None:
    terms = arg.args if isinstance(arg, Add) else (arg,)
    for term in terms:
        coef, mono = _split_coef(term)
        if mono is None:
            continue
        lin = _linear_part(mono, circles)
        if lin is None:
            _walk(term, circles)
            continue
        name, k = lin
        q_period, k_period = circles[name]
        # coefficient * period / (2 pi) must be an integer
        n = coef * q_period / 2
        if k + k_period - 1 != 0 or n.denominator != 1:
            raise PeriodicityError(
                f"frequency of circle coordinate {name} is not an integer multiple of 2*pi/period"
            )
