"""Scalar expressions over variables x1..xn with exact first derivatives.

Grammar (whitespace-insensitive, '#' has no meaning here):

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := ('-')? atom ('^' integer)?
    atom   := number | ident | func '(' expr ')' | '(' expr ')'
    ident  := 'x' positive-integer
    func   := 'sqrt' | 'exp' | 'log' | 'sin' | 'cos'

Exponents are integer literals only.  Derivatives are propagated forward
through the tree together with the value, so a single walk produces the
value and the full gradient.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DomainError,
    ExprSyntaxError,
    UnknownIdentifierError,
    VariableIndexError,
)

FUNCTIONS = ("sqrt", "exp", "log", "sin", "cos")


@dataclass(frozen=True)
class Expr:
    span: int | None = field(default=None, compare=False, kw_only=True)


@dataclass(frozen=True)
class Lit(Expr):
    value: float = 0.0


@dataclass(frozen=True)
class Var(Expr):
    index: int = 0  # 0-based


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr = None


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr = None
    exponent: int = 1


@dataclass(frozen=True)
class Bin(Expr):
    op: str = "+"
    left: Expr = None
    right: Expr = None


@dataclass(frozen=True)
class Call(Expr):
    func: str = "exp"
    arg: Expr = None


@dataclass(frozen=True)
class GradedValue:
    value: float
    partials: np.ndarray


_TOKEN_RE = re.compile(
    r"(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)

_VAR_RE = re.compile(r"^x(\d+)$")


class _Tokenizer:
    def __init__(self, source):
        self.source = source
        self.pos = 0
        self.tokens = []
        self._scan()
        self.cursor = 0

    def _scan(self):
        i, src = 0, self.source
        while i < len(src):
            if src[i].isspace():
                i += 1
                continue
            m = _TOKEN_RE.match(src, i)
            if m is None:
                raise ExprSyntaxError("unexpected character %r" % src[i], i)
            kind = m.lastgroup
            self.tokens.append((kind, m.group(), i))
            i = m.end()
        self.tokens.append(("end", "", len(src)))

    def peek(self):
        return self.tokens[self.cursor]

    def advance(self):
        tok = self.tokens[self.cursor]
        if tok[0] != "end":
            self.cursor += 1
        return tok


class _Parser:
    def __init__(self, source, n):
        self.toks = _Tokenizer(source)
        self.n = n

    def parse(self):
        e = self.expr()
        kind, text, off = self.toks.peek()
        if kind != "end":
            raise ExprSyntaxError("unexpected trailing input %r" % text, off)
        return e

    def expr(self):
        node = self.term()
        while True:
            kind, text, off = self.toks.peek()
            if kind == "op" and text in "+-":
                self.toks.advance()
                rhs = self.term()
                node = Bin(text, node, rhs, span=node.span)
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, text, off = self.toks.peek()
            if kind == "op" and text in "*/":
                self.toks.advance()
                rhs = self.factor()
                node = Bin(text, node, rhs, span=node.span)
            else:
                return node

    def factor(self):
        kind, text, off = self.toks.peek()
        negated = False
        if kind == "op" and text == "-":
            self.toks.advance()
            negated = True
        node = self.atom()
        pk, pt, poff = self.toks.peek()
        if pk == "op" and pt == "^":
            self.toks.advance()
            node = Pow(node, self._integer(), span=node.span)
        if negated:
            # fold a unary minus on a literal so printing round-trips
            if isinstance(node, Lit):
                node = Lit(-node.value, span=off)
            else:
                node = Neg(node, span=off)
        return node

    def _integer(self):
        kind, text, off = self.toks.peek()
        sign = 1
        if kind == "op" and text == "-":
            self.toks.advance()
            sign = -1
            kind, text, off = self.toks.peek()
        if kind != "num" or not text.isdigit():
            raise ExprSyntaxError("exponent must be an integer literal", off)
        self.toks.advance()
        return sign * int(text)

    def atom(self):
        kind, text, off = self.toks.advance()
        if kind == "num":
            return Lit(float(text), span=off)
        if kind == "ident":
            m = _VAR_RE.match(text)
            if m:
                index = int(m.group(1))
                if index < 1 or index > self.n:
                    raise VariableIndexError(
                        "variable index out of range: %s (n=%d)" % (text, self.n), off
                    )
                return Var(index - 1, span=off)
            if text in FUNCTIONS:
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(text, arg, span=off)
            raise UnknownIdentifierError("unknown identifier %r" % text, off)
        if kind == "op" and text == "(":
            node = self.expr()
            self._expect(")")
            return node
        raise ExprSyntaxError("expected a number, variable or '('", off)

    def _expect(self, symbol):
        kind, text, off = self.toks.advance()
        if kind != "op" or text != symbol:
            raise ExprSyntaxError("expected %r" % symbol, off)


def parse(source, n):
    """Parse ``source`` into an expression over x1..xn."""
    return _Parser(source, n).parse()


def _eval(e, x):
    if isinstance(e, Lit):
        return e.value, np.zeros(len(x))
    if isinstance(e, Var):
        g = np.zeros(len(x))
        if e.index >= len(x):
            raise DomainError("variable x%d beyond point dimension" % (e.index + 1), e.span)
        g[e.index] = 1.0
        return float(x[e.index]), g
    if isinstance(e, Neg):
        v, g = _eval(e.arg, x)
        return -v, -g
    if isinstance(e, Bin):
        lv, lg = _eval(e.left, x)
        rv, rg = _eval(e.right, x)
        if e.op == "+":
            return lv + rv, lg + rg
        if e.op == "-":
            return lv - rv, lg - rg
        if e.op == "*":
            return lv * rv, rv * lg + lv * rg
        if rv == 0.0:
            raise DomainError("division by zero", e.span)
        return lv / rv, (lg - (lv / rv) * rg) / rv
    if isinstance(e, Pow):
        v, g = _eval(e.base, x)
        k = e.exponent
        if k == 0:
            return 1.0, np.zeros(len(x))
        if v == 0.0 and k < 0:
            raise DomainError("zero raised to a negative power", e.span)
        try:
            val = float(v**k)
            dv = float(k) * v ** (k - 1)
        except OverflowError:
            raise DomainError("overflow in power", e.span) from None
        return val, dv * g
    if isinstance(e, Call):
        v, g = _eval(e.arg, x)
        try:
            if e.func == "sqrt":
                if v < 0.0:
                    raise DomainError("sqrt of a negative value", e.span)
                if v == 0.0:
                    raise DomainError("sqrt derivative undefined at zero", e.span)
                s = math.sqrt(v)
                return s, g / (2.0 * s)
            if e.func == "exp":
                s = math.exp(v)
                return s, s * g
            if e.func == "log":
                if v <= 0.0:
                    raise DomainError("log of a non-positive value", e.span)
                return math.log(v), g / v
            if e.func == "sin":
                return math.sin(v), math.cos(v) * g
            return math.cos(v), -math.sin(v) * g
        except OverflowError:
            raise DomainError("overflow in %s" % e.func, e.span) from None
    raise TypeError("not an expression node: %r" % (e,))


def eval_grad(e, x):
    """Evaluate ``e`` at ``x`` returning the value and all partials."""
    x = np.asarray(x, dtype=float)
    v, g = _eval(e, x)
    return GradedValue(float(v), g)


# precedence levels used by the printer: sum=1, product=2, unary minus=3,
# power=4, atom=5
def _print(e, prec):
    if isinstance(e, Lit):
        if not math.isfinite(e.value):
            raise ValueError("cannot print non-finite literal %r" % e.value)
        text = format(e.value, ".17g")
        if e.value < 0 and prec > 3:
            return "(%s)" % text
        return text
    if isinstance(e, Var):
        return "x%d" % (e.index + 1)
    if isinstance(e, Call):
        return "%s(%s)" % (e.func, _print(e.arg, 1))
    if isinstance(e, Neg):
        inner = _print(e.arg, 4)
        text = "-%s" % inner
        return "(%s)" % text if prec > 3 else text
    if isinstance(e, Pow):
        text = "%s^%d" % (_print(e.base, 5), e.exponent)
        return "(%s)" % text if prec > 4 else text
    if isinstance(e, Bin):
        if e.op in "+-":
            mine, left, right = 1, 1, 2
        else:
            mine, left, right = 2, 2, 3
        text = "%s %s %s" % (_print(e.left, left), e.op, _print(e.right, right))
        return "(%s)" % text if prec > mine else text
    raise TypeError("not an expression node: %r" % (e,))


def to_source(e):
    """Render an expression so that parsing the result rebuilds the tree."""
    return _print(e, 1)
