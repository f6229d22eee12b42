"""Small arithmetic expression language used for symbols, matrix entries and mu closed forms.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | VAR | FUNC '(' expr (',' expr)* ')' | '(' expr ')'

Variables are ``j``, ``k``, ``n`` and ``t``; functions are ``log``, ``exp``,
``sqrt``, ``abs``, ``min`` and ``max``.  Expressions evaluate on plain floats or
elementwise on numpy arrays (any float dtype, including ``longdouble``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnknownIdentifier

VARIABLES = frozenset({"j", "k", "n", "t"})
FUNCTIONS = {"log": 1, "exp": 1, "sqrt": 1, "abs": 1, "min": None, "max": None}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Expr = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(src):
    pos = 0
    tokens = []
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            break
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {src[pos]!r}", pos)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.advance()
        if text != value:
            raise ExprSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", pos)

    def parse(self):
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Neg(self.unary())
        if kind == "op" and text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.advance()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[text]
                if arity is not None and len(args) != arity:
                    raise ExprSyntaxError(f"{text} takes {arity} argument(s)", pos)
                if arity is None and len(args) < 2:
                    raise ExprSyntaxError(f"{text} takes at least 2 arguments", pos)
                return Call(text, tuple(args))
            if text in VARIABLES:
                return Var(text)
            raise UnknownIdentifier(f"unknown identifier {text!r} at position {pos}")
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", pos)


def parse_expr(src: str) -> Expr:
    """Parse ``src`` into an AST; raises :class:`ExprSyntaxError` with a position."""
    return _Parser(src).parse()


# -- printing ---------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _prec(node):
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 5


def _fmt_num(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def to_source(node: Expr) -> str:
    """Print with the minimal parentheses that make ``parse_expr`` return an equal tree."""
    if isinstance(node, Num):
        return _fmt_num(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_source(a) for a in node.args)})"
    if isinstance(node, Neg):
        inner = to_source(node.operand)
        return f"-({inner})" if _prec(node.operand) < 3 else f"-{inner}"
    p = _PREC[node.op]
    left, right = to_source(node.left), to_source(node.right)
    if node.op == "^":
        if _prec(node.left) <= 4:
            left = f"({left})"
        if _prec(node.right) < 3:
            right = f"({right})"
        return f"{left}^{right}"
    if _prec(node.left) < p:
        left = f"({left})"
    if _prec(node.right) <= p:
        right = f"({right})"
    return f"{left} {node.op} {right}"


# -- evaluation -------------------------------------------------------------


def _check(cond, message):
    if np.any(cond):
        raise DomainError(message)


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        try:
            return env[node.name]
        except KeyError:
            raise UnknownIdentifier(f"variable {node.name!r} is not bound here") from None
    if isinstance(node, Neg):
        return -_eval(node.operand, env)
    if isinstance(node, Call):
        args = [_eval(a, env) for a in node.args]
        f = node.func
        if f == "log":
            _check(np.asarray(args[0]) <= 0, "log of a nonpositive number")
            return np.log(args[0])
        if f == "sqrt":
            _check(np.asarray(args[0]) < 0, "sqrt of a negative number")
            return np.sqrt(args[0])
        if f == "exp":
            return np.exp(args[0])
        if f == "abs":
            return np.abs(args[0])
        out = args[0]
        for a in args[1:]:
            out = np.minimum(out, a) if f == "min" else np.maximum(out, a)
        return out
    a = _eval(node.left, env)
    b = _eval(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        _check(np.asarray(b) == 0, "division by zero")
        return a / b
    base, expo = np.asarray(a), np.asarray(b)
    _check((base < 0) & (expo != np.round(expo)), "fractional power of a negative number")
    _check((base == 0) & (expo < 0), "negative power of zero")
    return np.power(a, b)


def evaluate(node: Expr, env: Mapping[str, object]):
    """Evaluate ``node`` with variables from ``env`` (floats or numpy arrays)."""
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = _eval(node, env)
    if isinstance(out, np.ndarray) and out.ndim == 0:
        out = out[()]
    if isinstance(out, (float, int, np.floating)) and math.isnan(float(out)):
        raise DomainError("expression evaluated to NaN")
    if isinstance(out, np.ndarray) and np.isnan(out).any():
        raise DomainError("expression evaluated to NaN")
    return out


def free_variables(node: Expr) -> frozenset:
    if isinstance(node, Var):
        return frozenset({node.name})
    if isinstance(node, Num):
        return frozenset()
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, Call):
        return frozenset().union(*(free_variables(a) for a in node.args))
    return free_variables(node.left) | free_variables(node.right)


def compile_expr(src: str, allowed=VARIABLES):
    """Parse and check that only ``allowed`` variables occur."""
    node = parse_expr(src)
    extra = free_variables(node) - frozenset(allowed)
    if extra:
        raise UnknownIdentifier(f"variables {sorted(extra)} not allowed here (allowed: {sorted(allowed)})")
    return node
