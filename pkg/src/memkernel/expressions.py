"""A small univariate expression language with exact symbolic differentiation.

Data functions (initial profiles, the sensor shape, trial kernels) are given
on the command line or in config files as text formulas.  The grammar is
deliberately tiny so that differentiation is total and the derivative of any
parseable expression is again parseable:

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' exponent)?
    exponent := '-'? INT | '(' expr ')'     # must fold to an integer constant
    atom     := NUMBER | FUNC '(' expr ')' | VAR | '(' expr ')'
    FUNC     := 'sin' | 'cos' | 'exp'

There is exactly one free variable per expression (declared at parse time),
no implicit multiplication, and `^` accepts integer exponents only.  Trees
are immutable; sharing them across threads is safe.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ExpressionSyntaxError

__all__ = ["FuncExpr", "parse", "differentiate", "to_text", "sample"]

_FUNCTIONS = ("sin", "cos", "exp")


class FuncExpr:
    """Base class for expression nodes."""

    __slots__ = ()

    def eval(self, value):
        """Evaluate at a scalar or ndarray argument; result checked finite."""
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                out = self._ev(value)
        except (OverflowError, FloatingPointError) as exc:
            raise EvaluationError(f"overflow evaluating {self}") from exc
        if not np.all(np.isfinite(out)):
            raise EvaluationError(f"non-finite result evaluating {self}")
        return out

    def diff(self):
        """Exact symbolic derivative with respect to the free variable."""
        raise NotImplementedError

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, repr=False)
class Const(FuncExpr):
    value: float

    def _ev(self, v):
        return self.value if np.isscalar(v) else np.full_like(v, self.value, dtype=float)

    def diff(self):
        return Const(0.0)


@dataclass(frozen=True, repr=False)
class Var(FuncExpr):
    name: str

    def _ev(self, v):
        return v

    def diff(self):
        return Const(1.0)


@dataclass(frozen=True, repr=False)
class Unary(FuncExpr):
    op: str  # 'sin' | 'cos' | 'exp' | 'neg'
    arg: FuncExpr

    def _ev(self, v):
        a = self.arg._ev(v)
        if self.op == "sin":
            return np.sin(a)
        if self.op == "cos":
            return np.cos(a)
        if self.op == "exp":
            return np.exp(a)
        return -a

    def diff(self):
        da = self.arg.diff()
        if self.op == "sin":
            return _mul(Unary("cos", self.arg), da)
        if self.op == "cos":
            return _mul(_neg(Unary("sin", self.arg)), da)
        if self.op == "exp":
            return _mul(Unary("exp", self.arg), da)
        return _neg(da)


@dataclass(frozen=True, repr=False)
class Power(FuncExpr):
    base: FuncExpr
    exponent: int

    def _ev(self, v):
        b = self.base._ev(v)
        if self.exponent < 0:
            if np.any(b == 0.0):
                raise EvaluationError("zero raised to a negative power")
        # integer exponent: well defined for negative bases too
        return b ** self.exponent

    def diff(self):
        n = self.exponent
        return _mul(_mul(Const(float(n)), _pow(self.base, n - 1)), self.base.diff())


@dataclass(frozen=True, repr=False)
class BinOp(FuncExpr):
    op: str  # '+', '-', '*', '/'
    left: FuncExpr
    right: FuncExpr

    def _ev(self, v):
        a, b = self.left._ev(v), self.right._ev(v)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if np.any(b == 0.0):
            raise EvaluationError("division by zero")
        return a / b

    def diff(self):
        u, v = self.left, self.right
        du, dv = u.diff(), v.diff()
        if self.op == "+":
            return _add(du, dv)
        if self.op == "-":
            return _sub(du, dv)
        if self.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        return _div(_sub(_mul(du, v), _mul(u, dv)), _pow(v, 2))


def _is_const(e, value=None):
    return isinstance(e, Const) and (value is None or e.value == value)


# Smart constructors: constant folding plus identity elements only.  No
# rewriting beyond that; this is not a CAS.

def _add(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return BinOp("+", a, b)


def _sub(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return _neg(b)
    return BinOp("-", a, b)


def _mul(a, b):
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is_const(b) and b.value != 0.0 and _is_const(a):
        return Const(a.value / b.value)
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return Const(0.0)
    if _is_const(b, 1.0):
        return a
    return BinOp("/", a, b)


def _pow(base, n):
    if n == 0:
        return Const(1.0)
    if n == 1:
        return base
    if _is_const(base):
        return Const(base.value ** float(n))
    return Power(base, n)


def _neg(a):
    if _is_const(a):
        return Const(-a.value)
    return Unary("neg", a)


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


class _Parser:
    def __init__(self, text, var):
        self.text = text
        self.var = var
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.lastgroup is None:
                bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
                if bad >= len(text):
                    break
                raise ExpressionSyntaxError(
                    f"unexpected character {text[bad:bad + 1]!r}", bad
                )
            self.tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
            pos = m.end()
        self.i = 0

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("end", "", len(self.text))

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.take()
        if text != value:
            raise ExpressionSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", off)

    def parse(self):
        e = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExpressionSyntaxError(f"trailing input {text!r}", off)
        return e

    def expr(self):
        e = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            rhs = self.term()
            e = _add(e, rhs) if op == "+" else _sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            rhs = self.unary()
            e = _mul(e, rhs) if op == "*" else _div(e, rhs)
        return e

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return _neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return _pow(base, self.exponent())
        return base

    def exponent(self):
        kind, text, off = self.peek()
        if text == "(":
            self.take()
            inner = self.expr()
            self.expect(")")
            if not isinstance(inner, Const):
                raise ExpressionSyntaxError("exponent must be a constant", off)
            return self._as_int(inner.value, off)
        neg = False
        if text == "-":
            self.take()
            neg = True
            kind, text, off = self.peek()
        if kind != "num":
            raise ExpressionSyntaxError("expected integer exponent", off)
        self.take()
        value = float(text)
        return self._as_int(-value if neg else value, off)

    @staticmethod
    def _as_int(value, off):
        if value != int(value):
            raise ExpressionSyntaxError(f"non-integer exponent {value}", off)
        return int(value)

    def atom(self):
        kind, text, off = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in _FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Unary(text, arg)
            if text == self.var:
                return Var(text)
            raise ExpressionSyntaxError(f"unknown identifier {text!r}", off)
        if text == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExpressionSyntaxError(f"unexpected {text or 'end of input'!r}", off)


def parse(text, var):
    """Parse ``text`` as an expression in the single variable ``var``."""
    if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9]*", var) or var in _FUNCTIONS:
        raise ValueError(f"invalid variable name {var!r}")
    return _Parser(text, var).parse()


def differentiate(e):
    """Exact derivative of ``e``; repeat for higher derivatives."""
    return e.diff()


def to_text(e):
    """Canonical fully parenthesized rendering; round-trips through parse."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        if e.op == "neg":
            return f"(-{to_text(e.arg)})"
        return f"{e.op}({to_text(e.arg)})"
    if isinstance(e, Power):
        return f"({to_text(e.base)}^{e.exponent})"
    return f"({to_text(e.left)}{e.op}{to_text(e.right)})"


def sample(e, points):
    """Evaluate ``e`` at an array of points, returning a float ndarray."""
    return np.asarray(e.eval(np.asarray(points, dtype=float)), dtype=float)
