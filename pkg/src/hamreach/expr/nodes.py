"""Expression tree, normalizing constructors and the fixed simplifier.

Raw nodes (``Neg``, ``Sub``, ``Div``) come out of the parser; ``simplify``
rewrites them into the normal form built only from ``Const``, ``Pi``,
``Var``, ``Add``, ``Mul``, ``Pow`` and ``Func``.  The normal form:

* sums and products are flat and sorted, like terms are collected,
  equal bases are merged into integer powers;
* a product carries at most one rational coefficient, in front;
* products distribute over sums, so no ``Add`` appears under ``Mul`` or
  under a positive ``Pow`` (negative powers of sums stay atomic);
* no trigonometric identities are applied.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Iterable


class ExprError(ValueError):
    """Raised for malformed expressions."""


class Expr:
    __slots__ = ("_hash", "_key")
    _fields: tuple[str, ...] = ()

    def __init__(self, **fields):
        for name, value in fields.items():
            object.__setattr__(self, name, value)

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    def _data(self):
        return tuple(getattr(self, f) for f in self._fields)

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            h = hash((type(self).__name__,) + self._data())
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other) or hash(self) != hash(other):
            return False
        return self._data() == other._data()

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        args = ", ".join(repr(v) for v in self._data())
        return f"{type(self).__name__}({args})"

    def __str__(self):
        return to_text(self)

    # Arithmetic sugar builds normalized trees.
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise ExprError("only integer exponents are supported")
        return power(self, n)


class Const(Expr):
    __slots__ = ("value",)
    _fields = ("value",)

    def __init__(self, value):
        super().__init__(value=Fraction(value))


class Pi(Expr):
    __slots__ = ()


class Var(Expr):
    __slots__ = ("name",)
    _fields = ("name",)

    def __init__(self, name: str):
        super().__init__(name=name)


class Neg(Expr):
    __slots__ = ("arg",)
    _fields = ("arg",)

    def __init__(self, arg):
        super().__init__(arg=arg)


class Add(Expr):
    __slots__ = ("args",)
    _fields = ("args",)

    def __init__(self, args):
        super().__init__(args=tuple(args))


class Sub(Expr):
    __slots__ = ("left", "right")
    _fields = ("left", "right")

    def __init__(self, left, right):
        super().__init__(left=left, right=right)


class Mul(Expr):
    __slots__ = ("args",)
    _fields = ("args",)

    def __init__(self, args):
        super().__init__(args=tuple(args))


class Div(Expr):
    __slots__ = ("num", "den")
    _fields = ("num", "den")

    def __init__(self, num, den):
        if isinstance(den, Const) and den.value == 0:
            raise ExprError("division by the constant zero")
        super().__init__(num=num, den=den)


class Pow(Expr):
    __slots__ = ("base", "exp")
    _fields = ("base", "exp")

    def __init__(self, base, exp: int):
        if not isinstance(exp, int):
            raise ExprError("exponents must be integers")
        super().__init__(base=base, exp=exp)


FUNCTIONS = ("sin", "cos", "exp")


class Func(Expr):
    __slots__ = ("name", "arg")
    _fields = ("name", "arg")

    def __init__(self, name: str, arg):
        if name not in FUNCTIONS:
            raise ExprError(f"unknown function {name!r}")
        super().__init__(name=name, arg=arg)


ZERO = Const(0)
ONE = Const(1)
MINUS_ONE = Const(-1)
PI = Pi()


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, Fraction)):
        return Const(value)
    if isinstance(value, float):
        return Const(Fraction(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


# -- ordering -------------------------------------------------------------

_VAR_KIND = {"x": 0, "p": 1}


def var_sort_key(name: str):
    if name == "t":
        return (2, 0)
    return (_VAR_KIND[name[0]], int(name[1:]))


def order_key(e: Expr):
    try:
        return e._key
    except AttributeError:
        pass
    if isinstance(e, Const):
        k = (0, e.value)
    elif isinstance(e, Pi):
        k = (1,)
    elif isinstance(e, Var):
        k = (2,) + var_sort_key(e.name)
    elif isinstance(e, Func):
        k = (3, e.name, order_key(e.arg))
    elif isinstance(e, Pow):
        k = (4, order_key(e.base), e.exp)
    elif isinstance(e, Mul):
        k = (5, tuple(order_key(a) for a in e.args))
    elif isinstance(e, Add):
        k = (6, tuple(order_key(a) for a in e.args))
    else:
        # raw nodes never meet sorted containers, but keep the order total
        k = (7, type(e).__name__, tuple(order_key(a) for a in e._data() if isinstance(a, Expr)))
    object.__setattr__(e, "_key", k)
    return k


# -- normalizing constructors -----------------------------------------------

def _split_coef(term: Expr) -> tuple[Fraction, Expr | None]:
    if isinstance(term, Const):
        return term.value, None
    if isinstance(term, Mul) and isinstance(term.args[0], Const):
        rest = term.args[1:]
        return term.args[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return Fraction(1), term


def _with_coef(coef: Fraction, mono: Expr) -> Expr:
    if coef == 1:
        return mono
    if isinstance(mono, Mul):
        return Mul((Const(coef),) + mono.args)
    return Mul((Const(coef), mono))


def add(*terms: Expr) -> Expr:
    constant = Fraction(0)
    coefs: dict[Expr, Fraction] = {}
    stack = list(terms)
    while stack:
        t = stack.pop()
        if isinstance(t, Add):
            stack.extend(t.args)
            continue
        c, mono = _split_coef(t)
        if mono is None:
            constant += c
        else:
            coefs[mono] = coefs.get(mono, Fraction(0)) + c
    monos = sorted((m for m, c in coefs.items() if c != 0), key=order_key)
    out = [_with_coef(coefs[m], m) for m in monos]
    if constant != 0:
        out.insert(0, Const(constant))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(out)


def mul(*factors: Expr) -> Expr:
    coef = Fraction(1)
    exps: dict[Expr, int] = {}
    stack = list(factors)
    while stack:
        f = stack.pop()
        if isinstance(f, Const):
            coef *= f.value
        elif isinstance(f, Mul):
            stack.extend(f.args)
        elif isinstance(f, Pow):
            exps[f.base] = exps.get(f.base, 0) + f.exp
        else:
            exps[f] = exps.get(f, 0) + 1
    if coef == 0:
        return ZERO
    atoms: list[Expr] = []
    sums: list[Add] = []
    for base, n in exps.items():
        if n == 0:
            continue
        if isinstance(base, Add) and n > 0:
            sums.extend([base] * n)
        else:
            atoms.append(base if n == 1 else Pow(base, n))
    atoms.sort(key=order_key)
    if not sums:
        if not atoms:
            return Const(coef)
        mono = atoms[0] if len(atoms) == 1 else Mul(atoms)
        return _with_coef(coef, mono)
    # distribute
    head = mul(Const(coef), *atoms) if atoms else Const(coef)
    terms = [head]
    for s in sums:
        terms = [mul(a, b) for a in terms for b in s.args]
    return add(*terms)


def power(base: Expr, n: int) -> Expr:
    if not isinstance(n, int):
        raise ExprError("exponents must be integers")
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const):
        if base.value == 0 and n < 0:
            raise ExprError("division by the constant zero")
        return Const(base.value ** n)
    if isinstance(base, Pow):
        return power(base.base, base.exp * n)
    if isinstance(base, Mul):
        return mul(*(power(f, n) for f in base.args))
    if isinstance(base, Add) and n > 0:
        return mul(*([base] * n))
    return Pow(base, n)


def func(name: str, arg: Expr) -> Expr:
    if arg == ZERO:
        return ZERO if name == "sin" else ONE
    return Func(name, arg)


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    if b == ZERO:
        raise ExprError("division by the constant zero")
    return mul(a, power(b, -1))


def sin(e: Expr) -> Expr:
    return func("sin", as_expr(e))


def cos(e: Expr) -> Expr:
    return func("cos", as_expr(e))


def exp(e: Expr) -> Expr:
    return func("exp", as_expr(e))


def simplify(e: Expr) -> Expr:
    if isinstance(e, (Const, Pi, Var)):
        return e
    if isinstance(e, Add):
        return add(*(simplify(a) for a in e.args))
    if isinstance(e, Mul):
        return mul(*(simplify(a) for a in e.args))
    if isinstance(e, Pow):
        return power(simplify(e.base), e.exp)
    if isinstance(e, Func):
        return func(e.name, simplify(e.arg))
    if isinstance(e, Neg):
        return neg(simplify(e.arg))
    if isinstance(e, Sub):
        return sub(simplify(e.left), simplify(e.right))
    if isinstance(e, Div):
        return div(simplify(e.num), simplify(e.den))
    raise TypeError(f"not an expression: {e!r}")


# -- traversal -------------------------------------------------------------

def children(e: Expr) -> Iterable[Expr]:
    for v in e._data():
        if isinstance(v, Expr):
            yield v
        elif isinstance(v, tuple):
            yield from v


def free_vars(e: Expr) -> frozenset[str]:
    out: set[str] = set()
    stack = [e]
    seen: set[int] = set()
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        if isinstance(n, Var):
            out.add(n.name)
        else:
            stack.extend(children(n))
    return frozenset(out)


def substitute(e: Expr, values: dict[str, Expr]) -> Expr:
    """Replace variables by expressions and renormalize."""
    values = {k: as_expr(v) for k, v in values.items()}
    memo: dict[Expr, Expr] = {}

    def walk(n: Expr) -> Expr:
        if n in memo:
            return memo[n]
        if isinstance(n, Var):
            r = values.get(n.name, n)
        elif isinstance(n, (Const, Pi)):
            r = n
        elif isinstance(n, Add):
            r = add(*(walk(a) for a in n.args))
        elif isinstance(n, Mul):
            r = mul(*(walk(a) for a in n.args))
        elif isinstance(n, Pow):
            r = power(walk(n.base), n.exp)
        elif isinstance(n, Func):
            r = func(n.name, walk(n.arg))
        else:
            r = walk(simplify(n))
        memo[n] = r
        return r

    return walk(e)


def size(e: Expr) -> int:
    return 1 + sum(size(c) for c in children(e))


# -- printing ----------------------------------------------------------------

def _const_text(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    return f"{v.numerator}/{v.denominator}"


def _is_negative_term(t: Expr) -> bool:
    if isinstance(t, Const):
        return t.value < 0
    return isinstance(t, Mul) and isinstance(t.args[0], Const) and t.args[0].value < 0


def _atomic(e: Expr) -> bool:
    return isinstance(e, (Var, Pi, Func)) or (
        isinstance(e, Const) and e.value >= 0 and e.value.denominator == 1
    )


def to_text(e: Expr) -> str:
    """Render ``e`` in the input grammar; the output re-parses to ``e``."""
    if isinstance(e, Const):
        return _const_text(e.value)
    if isinstance(e, Pi):
        return "pi"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Add):
        parts = [to_text(e.args[0])]
        for t in e.args[1:]:
            if _is_negative_term(t):
                parts.append("- " + to_text(neg(t)))
            else:
                parts.append("+ " + to_text(t))
        return " ".join(parts)
    if isinstance(e, Mul):
        args = list(e.args)
        prefix = ""
        if isinstance(args[0], Const) and args[0].value == -1:
            prefix = "-"
            args = args[1:]
        texts = []
        for a in args:
            s = to_text(a)
            texts.append(f"({s})" if isinstance(a, (Add, Sub, Neg)) else s)
        return prefix + "*".join(texts)
    if isinstance(e, Pow):
        b = to_text(e.base)
        if not _atomic(e.base):
            b = f"({b})"
        return f"{b}^{e.exp}" if e.exp > 0 else f"{b}^({e.exp})"
    if isinstance(e, Neg):
        return f"-({to_text(e.arg)})"
    if isinstance(e, Sub):
        return f"{to_text(e.left)} - ({to_text(e.right)})"
    if isinstance(e, Div):
        return f"({to_text(e.num)})/({to_text(e.den)})"
    raise TypeError(f"not an expression: {e!r}")
