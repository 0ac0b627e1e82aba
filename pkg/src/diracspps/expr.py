"""Small complex-valued expression language for problem-file coefficients.

Grammar (whitespace-insensitive, ``^`` binds tighter than unary minus)::

    sum     := product (('+' | '-') product)*
    product := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right-associative
    atom    := number | 'x' | 'pi' | 'e' | 'i' | name '(' sum ')' | '(' sum ')'

Numbers are decimal with optional exponent; ``i`` is the imaginary unit.
Functions use principal branches (``sqrt(-1) == i``).
"""

from __future__ import annotations

import cmath
import re
from dataclasses import dataclass
from typing import Union

from .errors import EvalError, ParseError

_FUNCTIONS = {
    "sin": cmath.sin,
    "cos": cmath.cos,
    "tan": cmath.tan,
    "exp": cmath.exp,
    "log": cmath.log,
    "sqrt": cmath.sqrt,
    "sinh": cmath.sinh,
    "cosh": cmath.cosh,
    "abs": lambda z: complex(abs(z)),
}

_CONSTANTS = {"pi": complex(cmath.pi), "e": complex(cmath.e), "i": 1j}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


Node = Union["Num", "Var", "Neg", "BinOp", "Call"]


@dataclass(frozen=True)
class Num:
    value: complex


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: Node


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Call:
    name: str
    arg: Node


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        match = _TOKEN_RE.match(src, pos)
        if match is None:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            raise ParseError(f"unexpected character {stripped[0]!r}", len(src) - len(stripped))
        kind = match.lastgroup
        tokens.append(_Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(_Token("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str) -> None:
        self.tokens = _tokenize(src)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> None:
        tok = self.advance()
        if tok.kind != "op" or tok.text != op:
            raise ParseError(f"expected {op!r}, found {tok.text or 'end of input'!r}", tok.offset)

    def parse(self) -> Node:
        node = self.sum()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing input {tok.text!r}", tok.offset)
        return node

    def sum(self) -> Node:
        node = self.product()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.product())
        return node

    def product(self) -> Node:
        node = self.unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek().kind == "op" and self.peek().text == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.advance()
        if tok.kind == "num":
            return Num(complex(float(tok.text)))
        if tok.kind == "name":
            if tok.text == "x":
                return Var()
            if tok.text in _CONSTANTS:
                return Num(_CONSTANTS[tok.text])
            if tok.text in _FUNCTIONS:
                self.expect_op("(")
                arg = self.sum()
                self.expect_op(")")
                return Call(tok.text, arg)
            raise ParseError(f"unknown identifier {tok.text!r}", tok.offset)
        if tok.kind == "op" and tok.text == "(":
            node = self.sum()
            self.expect_op(")")
            return node
        raise ParseError(f"expected a value, found {tok.text or 'end of input'!r}", tok.offset)


class Expression:
    """Parsed expression; callable as a real -> complex map."""

    __slots__ = ("root", "source")

    def __init__(self, root: Node, source: str) -> None:
        self.root = root
        self.source = source

    def __call__(self, x: float) -> complex:
        return evaluate(self, x)

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"


def parse(src: str) -> Expression:
    """Parse an expression string; raises :class:`ParseError` with offset."""
    return Expression(_Parser(src).parse(), src)


def _eval(node: Node, x: complex) -> complex:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, BinOp):
        left = _eval(node.left, x)
        right = _eval(node.right, x)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if node.op == "/":
            if right == 0:
                raise EvalError("division by zero")
            return left / right
        # "^": integer powers stay exact, otherwise principal branch
        if right.imag == 0 and right.real == int(right.real):
            return left ** int(right.real)
        return left ** right
    if isinstance(node, Call):
        arg = _eval(node.arg, x)
        try:
            return _FUNCTIONS[node.name](arg)
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise EvalError(f"{node.name}({arg!r}): {exc}") from exc
    raise TypeError(f"unknown node {node!r}")


def evaluate(expression: Expression, x: float) -> complex:
    """Evaluate at a real point with complex semantics."""
    try:
        return _eval(expression.root, complex(x))
    except EvalError:
        raise
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise EvalError(str(exc)) from exc


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return f"{z.real:.17g}" if z.real >= 0 else f"(-{abs(z.real):.17g})"
    if z.real == 0:
        core = f"{z.imag:.17g}*i" if z.imag >= 0 else f"(-{abs(z.imag):.17g}*i)"
        return core
    return f"({z.real:.17g}{z.imag:+.17g}*i)"


def _print(node: Node) -> str:
    # Emits fully parenthesized sub-expressions, so precedence survives.
    if isinstance(node, Num):
        return _fmt_complex(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return f"(-{_print(node.operand)})"
    if isinstance(node, BinOp):
        return f"({_print(node.left)}{node.op}{_print(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({_print(node.arg)})"
    raise TypeError(f"unknown node {node!r}")


def pretty(expression: Expression) -> str:
    """Render back to parseable source (parenthesized)."""
    return _print(expression.root)
