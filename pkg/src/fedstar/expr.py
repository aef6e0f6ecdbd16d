"""Surface syntax for test functions: parsing, printing and lowering to jets.

Grammar, loosest binding first::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' ['-'] INT)?
    atom   := INT | 'i' | SYMBOL | '(' expr ')'

Symbols are ``x1..x2n`` on real charts and ``z1..zn``, ``zb1..zbn`` on complex
ones.  Exponents are integers and do not chain.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Union

from .jets import Frame, Jet, Scalar, SingularityError

__all__ = ["Num", "Imag", "Sym", "Neg", "Bin", "Pow", "Expr", "ExprError", "ParseError",
           "UnknownSymbol", "parse", "to_source", "lower", "lower_with", "evaluate_constant",
           "chart_symbols"]


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col


class UnknownSymbol(ParseError):
    pass


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Imag:
    pass


@dataclass(frozen=True)
class Sym:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exp: int


Expr = Union[Num, Imag, Sym, Neg, Bin, Pow]

_SYMBOL = re.compile(r"(x|z|zb)([1-9][0-9]*)\Z")
_TOKEN = re.compile(r"\s*(?:(?P<int>[0-9]+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))")


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    pos = 0
    line, line_start = 1, 0
    while True:
        # skip whitespace while tracking newlines
        while pos < len(src) and src[pos].isspace():
            if src[pos] == "\n":
                line += 1
                line_start = pos + 1
            pos += 1
        if pos >= len(src):
            toks.append(_Tok("end", "", line, pos - line_start + 1))
            return toks
        m = _TOKEN.match(src, pos)
        col = pos - line_start + 1
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {src[pos]!r}", line, col)
        kind = m.lastgroup
        toks.append(_Tok(kind, m.group(kind), line, col))
        pos = m.end()


class _Parser:
    def __init__(self, src: str, symbols: frozenset[str] | None):
        self.toks = _tokenize(src)
        self.i = 0
        self.symbols = symbols

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, t: _Tok, what: str):
        found = "end of input" if t.kind == "end" else repr(t.text)
        raise ParseError(f"expected {what}, found {found}", t.line, t.col)

    def run(self) -> Expr:
        e = self.expr()
        t = self.peek()
        if t.kind != "end":
            if t.text == "^":
                raise ParseError("exponents do not chain; use parentheses", t.line, t.col)
            self.fail(t, "operator or end of input")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek().text in ("+", "-") and self.peek().kind == "op":
            op = self.take().text
            e = Bin(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek().text in ("*", "/") and self.peek().kind == "op":
            op = self.take().text
            e = Bin(op, e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek().kind == "op" and self.peek().text == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            sign = 1
            if self.peek().kind == "op" and self.peek().text == "-":
                self.take()
                sign = -1
            t = self.peek()
            if t.kind != "int":
                self.fail(t, "integer exponent")
            self.take()
            return Pow(base, sign * int(t.text))
        return base

    def atom(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.take()
            return Num(int(t.text))
        if t.kind == "name":
            self.take()
            if t.text == "i":
                return Imag()
            if self.symbols is not None:
                if t.text not in self.symbols:
                    raise UnknownSymbol(f"unknown symbol {t.text!r}", t.line, t.col)
            elif not _SYMBOL.match(t.text):
                raise UnknownSymbol(f"unknown symbol {t.text!r}", t.line, t.col)
            return Sym(t.text)
        if t.kind == "op" and t.text == "(":
            self.take()
            e = self.expr()
            if self.peek().text != ")":
                self.fail(self.peek(), "')'")
            self.take()
            return e
        self.fail(t, "number, symbol or '('")


def parse(source: str, symbols=None) -> Expr:
    """Parse ``source``; ``symbols`` (an iterable of names) restricts the accepted symbols."""
    return _Parser(source, frozenset(symbols) if symbols is not None else None).run()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(e: Expr) -> int:
    if isinstance(e, Bin):
        return _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def to_source(e: Expr) -> str:
    """Print with the fewest parentheses that parse back to the same tree."""
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Imag):
        return "i"
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Neg):
        inner = to_source(e.arg)
        return "-" + (f"({inner})" if _prec(e.arg) < 3 else inner)
    if isinstance(e, Pow):
        inner = to_source(e.base)
        return (f"({inner})" if _prec(e.base) < 5 else inner) + f"^{e.exp}"
    p = _PREC[e.op]
    left, right = to_source(e.left), to_source(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return f"{left} {e.op} {right}" if p == 1 else f"{left}{e.op}{right}"


def chart_symbols(n: int, frame: Frame | str) -> dict[str, int]:
    """Surface names mapped to frame coordinate indices (1-indexed names)."""
    if Frame(frame) is Frame.COMPLEX:
        out = {f"z{k + 1}": k for k in range(n)}
        out.update({f"zb{k + 1}": n + k for k in range(n)})
        return out
    return {f"x{k + 1}": k for k in range(2 * n)}


def lower_with(e: Expr, coords: Mapping[str, Jet], dim: int, order: int) -> Jet:
    """Evaluate ``e`` on the given coordinate jets."""
    def go(x: Expr) -> Jet:
        if isinstance(x, Num):
            return Jet.constant(dim, order, x.value)
        if isinstance(x, Imag):
            return Jet.constant(dim, order, Scalar(0, 1))
        if isinstance(x, Sym):
            if x.name not in coords:
                raise UnknownSymbol(f"symbol {x.name!r} does not belong to this chart", 1, 1)
            return coords[x.name]
        if isinstance(x, Neg):
            return -go(x.arg)
        if isinstance(x, Pow):
            b = go(x.base)
            if x.exp < 0 and not b.eval0():
                raise SingularityError(f"{to_source(x.base)!r} vanishes at the base point "
                                       f"and is raised to a negative power")
            return b ** x.exp
        a, b = go(x.left), go(x.right)
        if x.op == "+":
            return a + b
        if x.op == "-":
            return a - b
        if x.op == "*":
            return a * b
        if not b.eval0():
            raise SingularityError(f"denominator {to_source(x.right)!r} vanishes at the base point")
        return a / b

    return go(e)


def lower(e: Expr, model, order: int) -> Jet:
    """Jet of ``e`` at the model's base point, of the given order."""
    names = chart_symbols(model.n, model.frame)
    coords = {s: model.coordinate(i, order) for s, i in names.items()}
    return lower_with(e, coords, model.dim, order)


def evaluate_constant(source: str) -> Scalar:
    """Value of a symbol-free expression such as ``1/2 - i/3``."""
    e = parse(source, symbols=())
    return lower_with(e, {}, 1, 0).eval0()
