"""Parser and evaluator for the scalar expressions used in scenario configs.

Grammar (precedence low to high: ``+ -``, ``* /``, unary ``-``, ``^``; the
power operator is right-associative and binds tighter than unary minus, so
``-2^2`` is ``-(2^2)`` and ``2^3^2`` is ``2^(3^2)``):

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | power
    power  := atom ("^" factor)?
    atom   := NUMBER | "pi" | "t" | "x<k>" | NAME "(" expr ")" | "(" expr ")"

Variables are the state components ``x1 .. xn`` plus the time variable ``t``.
Available functions: sin, cos, tan, exp, sqrt, abs, sign.  ``sign(0)`` is 0,
the usual sliding-mode convention.  Evaluation is plain IEEE double
arithmetic and deterministic; domain failures (division by zero, sqrt of a
negative, overflow to non-finite) raise :class:`ExprEvalError` naming the
offending subexpression.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Sequence

__all__ = [
    "Expr",
    "Num",
    "Var",
    "TimeVar",
    "Unary",
    "Binary",
    "Call",
    "ExprError",
    "ExprSyntaxError",
    "ExprEvalError",
    "parse",
    "evaluate",
    "to_text",
    "max_var_index",
    "uses_time",
]


class ExprError(ValueError):
    """Base class for expression failures."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ExprEvalError(ExprError):
    def __init__(self, message: str, subexpr: str):
        super().__init__(f"{message} in '{subexpr}'")
        self.subexpr = subexpr


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    """State component reference, 1-based: Var(2) is x2."""

    index: int


@dataclass(frozen=True)
class TimeVar:
    pass


@dataclass(frozen=True)
class Unary:
    """Negation; the only unary operator."""

    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expr"


Expr = Num | Var | TimeVar | Unary | Binary | Call

_FUNCTIONS = {"sin", "cos", "tan", "exp", "sqrt", "abs", "sign"}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> "list[tuple[str, str, int]]":
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastgroup is None:
            tail = text[pos:].lstrip()
            if not tail:
                break
            bad_at = len(text) - len(tail)
            raise ExprSyntaxError(f"unexpected character {tail[0]!r}", bad_at)
        tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        if tok is not None:
            self.i += 1
        return tok

    def expect_op(self, symbol: str):
        tok = self.take()
        if tok is None:
            raise ExprSyntaxError(f"expected '{symbol}'", len(self.text))
        if tok[0] != "op" or tok[1] != symbol:
            raise ExprSyntaxError(f"expected '{symbol}', found {tok[1]!r}", tok[2])

    def parse_expr(self):
        node = self.parse_term()
        while True:
            tok = self.peek()
            if tok is not None and tok[0] == "op" and tok[1] in "+-":
                self.take()
                node = Binary(tok[1], node, self.parse_term())
            else:
                return node

    def parse_term(self):
        node = self.parse_factor()
        while True:
            tok = self.peek()
            if tok is not None and tok[0] == "op" and tok[1] in "*/":
                self.take()
                node = Binary(tok[1], node, self.parse_factor())
            else:
                return node

    def parse_factor(self):
        tok = self.peek()
        if tok is not None and tok[0] == "op" and tok[1] == "-":
            self.take()
            return Unary(self.parse_factor())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        tok = self.peek()
        if tok is not None and tok[0] == "op" and tok[1] == "^":
            self.take()
            return Binary("^", base, self.parse_factor())
        return base

    def parse_atom(self):
        tok = self.take()
        if tok is None:
            raise ExprSyntaxError("unexpected end of expression", len(self.text))
        kind, value, pos = tok
        if kind == "num":
            parsed = float(value)
            if not math.isfinite(parsed):
                raise ExprSyntaxError(f"number literal out of range: {value}", pos)
            return Num(parsed)
        if kind == "op" and value == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        if kind == "name":
            if value == "pi":
                return Num(math.pi)
            if value == "t":
                return TimeVar()
            if value in _FUNCTIONS:
                self.expect_op("(")
                arg = self.parse_expr()
                self.expect_op(")")
                return Call(value, arg)
            m = re.fullmatch(r"x([1-9][0-9]*)", value)
            if m:
                return Var(int(m.group(1)))
            raise ExprSyntaxError(f"unknown identifier {value!r}", pos)
        raise ExprSyntaxError(f"unexpected token {value!r}", pos)


def parse(text: str) -> Expr:
    """Parse expression text into an AST."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(text)
    node = p.parse_expr()
    tok = p.peek()
    if tok is not None:
        raise ExprSyntaxError(f"trailing input {tok[1]!r}", tok[2])
    return node


def max_var_index(e: Expr) -> int:
    """Largest state index referenced, 0 if the expression uses none."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Unary):
        return max_var_index(e.operand)
    if isinstance(e, Binary):
        return max(max_var_index(e.left), max_var_index(e.right))
    if isinstance(e, Call):
        return max_var_index(e.arg)
    return 0


def uses_time(e: Expr) -> bool:
    if isinstance(e, TimeVar):
        return True
    if isinstance(e, Unary):
        return uses_time(e.operand)
    if isinstance(e, Binary):
        return uses_time(e.left) or uses_time(e.right)
    if isinstance(e, Call):
        return uses_time(e.arg)
    return False


def evaluate(e: Expr, state: Sequence[float], time: float) -> float:
    """Evaluate at the given state vector and time.

    The state must cover every ``x<k>`` the expression references.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, TimeVar):
        return time
    if isinstance(e, Var):
        if e.index > len(state):
            raise ExprEvalError(
                f"state has {len(state)} components", f"x{e.index}"
            )
        return float(state[e.index - 1])
    if isinstance(e, Unary):
        return -evaluate(e.operand, state, time)
    if isinstance(e, Binary):
        left = evaluate(e.left, state, time)
        right = evaluate(e.right, state, time)
        op = e.op
        if op == "+":
            out = left + right
        elif op == "-":
            out = left - right
        elif op == "*":
            out = left * right
        elif op == "/":
            if right == 0.0:
                raise ExprEvalError("division by zero", to_text(e))
            out = left / right
        else:
            try:
                out = math.pow(left, right)
            except (ValueError, OverflowError) as exc:
                raise ExprEvalError(f"invalid power ({exc})", to_text(e)) from None
        if not math.isfinite(out):
            raise ExprEvalError("non-finite result", to_text(e))
        return out
    if isinstance(e, Call):
        arg = evaluate(e.arg, state, time)
        name = e.name
        if name == "abs":
            return abs(arg)
        if name == "sign":
            return float((arg > 0.0) - (arg < 0.0))
        if name == "sqrt" and arg < 0.0:
            raise ExprEvalError("sqrt of a negative value", to_text(e))
        try:
            out = getattr(math, name)(arg)
        except (ValueError, OverflowError) as exc:
            raise ExprEvalError(f"math domain failure ({exc})", to_text(e)) from None
        if not math.isfinite(out):
            raise ExprEvalError("non-finite result", to_text(e))
        return out
    raise TypeError(f"not an expression node: {e!r}")


def _wrap(e: Expr) -> str:
    text = to_text(e)
    if isinstance(e, (Num, Var, TimeVar, Call)):
        return text
    return f"({text})"


def to_text(e: Expr) -> str:
    """Render an AST back to parseable text.

    Compound operands are parenthesized, so the round trip through
    :func:`parse` reproduces the exact evaluation order.
    """
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x{e.index}"
    if isinstance(e, TimeVar):
        return "t"
    if isinstance(e, Unary):
        return f"-{_wrap(e.operand)}"
    if isinstance(e, Binary):
        return f"{_wrap(e.left)} {e.op} {_wrap(e.right)}"
    if isinstance(e, Call):
        return f"{e.name}({to_text(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")
