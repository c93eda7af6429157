"""Small arithmetic expression language for coefficient functions.

Coefficient fields (drift components, zero-order term, right-hand side,
initial data) are given in config files as strings like ``"-1 + 0.5*sin(3*x)"``
or ``"piecewise(r, 0.2, 1.0, 0.8, -1.0, -2.0)"``.  The language knows the
variables ``x``, ``y`` and ``r`` (distance to the domain center), the unary
functions abs/exp/sin/cos/sqrt, binary min/max, ``^`` for powers and a radial
piecewise selector.  ASTs are immutable; evaluation is pure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import InfeigError

VARIABLES = ("x", "y", "r")
UNARY_FUNCTIONS = ("abs", "exp", "sin", "cos", "sqrt")
BINARY_FUNCTIONS = ("min", "max")


class ExprError(InfeigError):
    """Base class for expression errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, offset: int, expected: str):
        self.offset = offset
        self.expected = expected
        super().__init__(f"syntax error at byte {offset}: expected {expected}")


class UnknownIdentifier(ExprError):
    def __init__(self, name: str, offset: int):
        self.name = name
        self.offset = offset
        super().__init__(f"unknown identifier {name!r} at byte {offset}")


class EvalError(ExprError):
    """Division by zero, even root of a negative, or a non-finite result."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or one of UNARY_FUNCTIONS
    arg: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^ min max
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Piecewise:
    """Threshold selector: first (threshold, value) pair with selector <= threshold
    wins, otherwise the default branch."""

    selector: "ExprAst"
    thresholds: tuple
    values: tuple
    default: "ExprAst"


ExprAst = Union[Const, Var, Unary, Binary, Piecewise]

_NUM_START = "0123456789."
_IDENT_START = "abcdefghijklmnopqrstuvwxyz_"
_IDENT_BODY = _IDENT_START + "0123456789"


class _Scanner:
    def __init__(self, source: str):
        self.src = source
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos] in " \t\r\n":
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        if self.pos >= len(self.src):
            return ""
        return self.src[self.pos]

    def number(self) -> float:
        start = self.pos
        src = self.src
        n = len(src)
        while self.pos < n and src[self.pos].isdigit():
            self.pos += 1
        if self.pos < n and src[self.pos] == ".":
            self.pos += 1
            while self.pos < n and src[self.pos].isdigit():
                self.pos += 1
        if self.pos < n and src[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.pos < n and src[self.pos] in "+-":
                self.pos += 1
            if self.pos < n and src[self.pos].isdigit():
                while self.pos < n and src[self.pos].isdigit():
                    self.pos += 1
            else:
                self.pos = mark  # bare "e" belongs to the next token
        text = src[start:self.pos]
        try:
            return float(text)
        except ValueError:
            raise ExprSyntaxError(start, "a number") from None

    def ident(self) -> str:
        start = self.pos
        src = self.src
        while self.pos < len(src) and src[self.pos].lower() in _IDENT_BODY:
            self.pos += 1
        return src[start:self.pos]


def parse(source: str) -> ExprAst:
    """Parse an expression string into an AST.

    Precedence: ``^`` > unary minus > ``*``/``/`` > ``+``/``-``; parentheses
    override.  Errors report byte offsets into the source string.
    """
    sc = _Scanner(source)
    ast = _parse_sum(sc)
    sc.skip_ws()
    if sc.pos != len(sc.src):
        raise ExprSyntaxError(sc.pos, "end of input")
    return ast


def _parse_sum(sc: _Scanner) -> ExprAst:
    node = _parse_product(sc)
    while True:
        ch = sc.peek()
        if ch == "+" or ch == "-":
            sc.pos += 1
            rhs = _parse_product(sc)
            node = Binary(ch, node, rhs)
        else:
            return node


def _parse_product(sc: _Scanner) -> ExprAst:
    node = _parse_unary(sc)
    while True:
        ch = sc.peek()
        if ch == "*" or ch == "/":
            sc.pos += 1
            rhs = _parse_unary(sc)
            node = Binary(ch, node, rhs)
        else:
            return node


def _parse_unary(sc: _Scanner) -> ExprAst:
    if sc.peek() == "-":
        sc.pos += 1
        return Unary("neg", _parse_unary(sc))
    return _parse_power(sc)


def _parse_power(sc: _Scanner) -> ExprAst:
    base = _parse_atom(sc)
    if sc.peek() == "^":
        sc.pos += 1
        # right-associative; exponent may carry its own unary minus
        return Binary("^", base, _parse_unary(sc))
    return base


def _parse_atom(sc: _Scanner) -> ExprAst:
    ch = sc.peek()
    if ch == "":
        raise ExprSyntaxError(sc.pos, "a value")
    if ch == "(":
        sc.pos += 1
        inner = _parse_sum(sc)
        if sc.peek() != ")":
            raise ExprSyntaxError(sc.pos, "')'")
        sc.pos += 1
        return inner
    if ch in _NUM_START:
        return Const(sc.number())
    if ch.lower() in _IDENT_START:
        start = sc.pos
        name = sc.ident().lower()
        if sc.peek() == "(":
            return _parse_call(sc, name, start)
        if name in VARIABLES:
            return Var(name)
        raise UnknownIdentifier(name, start)
    raise ExprSyntaxError(sc.pos, "a number, variable or '('")


def _parse_call(sc: _Scanner, name: str, start: int) -> ExprAst:
    sc.pos += 1  # consume "("
    args = [_parse_sum(sc)]
    while sc.peek() == ",":
        sc.pos += 1
        args.append(_parse_sum(sc))
    if sc.peek() != ")":
        raise ExprSyntaxError(sc.pos, "',' or ')'")
    sc.pos += 1
    if name in UNARY_FUNCTIONS:
        if len(args) != 1:
            raise ExprSyntaxError(start, f"1 argument to {name}")
        return Unary(name, args[0])
    if name in BINARY_FUNCTIONS:
        if len(args) != 2:
            raise ExprSyntaxError(start, f"2 arguments to {name}")
        return Binary(name, args[0], args[1])
    if name == "piecewise":
        # piecewise(sel, t1, v1, ..., tn, vn, default): even count >= 4
        if len(args) < 4 or len(args) % 2 != 0:
            raise ExprSyntaxError(start, "piecewise(sel, t1, v1, ..., default)")
        pairs = args[1:-1]
        return Piecewise(args[0], tuple(pairs[0::2]), tuple(pairs[1::2]), args[-1])
    raise UnknownIdentifier(name, start)


def evaluate(ast: ExprAst, env: dict) -> float:
    """Evaluate at a point; env maps variable names to floats.

    Raises EvalError on division by zero, sqrt of a negative, invalid powers,
    or any non-finite result.
    """
    v = _eval(ast, env)
    if not math.isfinite(v):
        raise EvalError(f"non-finite result {v!r}")
    return v


def _eval(ast: ExprAst, env: dict) -> float:
    if isinstance(ast, Const):
        return ast.value
    if isinstance(ast, Var):
        return float(env[ast.name])
    if isinstance(ast, Unary):
        a = _eval(ast.arg, env)
        if ast.op == "neg":
            return -a
        if ast.op == "abs":
            return abs(a)
        if ast.op == "exp":
            try:
                return math.exp(a)
            except OverflowError:
                raise EvalError(f"exp overflow at argument {a!r}") from None
        if ast.op == "sin":
            return math.sin(a)
        if ast.op == "cos":
            return math.cos(a)
        if ast.op == "sqrt":
            if a < 0:
                raise EvalError(f"sqrt of negative value {a!r}")
            return math.sqrt(a)
        raise AssertionError(ast.op)
    if isinstance(ast, Binary):
        a = _eval(ast.left, env)
        b = _eval(ast.right, env)
        if ast.op == "+":
            return a + b
        if ast.op == "-":
            return a - b
        if ast.op == "*":
            return a * b
        if ast.op == "/":
            if b == 0.0:
                raise EvalError("division by zero")
            return a / b
        if ast.op == "^":
            if a == 0.0 and b < 0:
                raise EvalError("zero raised to a negative power")
            if a < 0 and b != int(b):
                raise EvalError("negative base with non-integer exponent")
            try:
                return float(a ** b)
            except OverflowError:
                raise EvalError("power overflow") from None
        if ast.op == "min":
            return min(a, b)
        if ast.op == "max":
            return max(a, b)
        raise AssertionError(ast.op)
    if isinstance(ast, Piecewise):
        s = _eval(ast.selector, env)
        for thr, val in zip(ast.thresholds, ast.values):
            if s <= _eval(thr, env):
                return _eval(val, env)
        return _eval(ast.default, env)
    raise AssertionError(type(ast))


def evaluate_on_points(ast: ExprAst, x, y, r) -> np.ndarray:
    """Vectorized evaluation over node arrays; same error policy as evaluate."""
    x = np.asarray(x, dtype=float)
    env = {"x": x, "y": np.asarray(y, dtype=float), "r": np.asarray(r, dtype=float)}
    with np.errstate(all="ignore"):
        out = _eval_vec(ast, env, x.shape)
    out = np.broadcast_to(out, x.shape).astype(float)
    if not np.all(np.isfinite(out)):
        raise EvalError("non-finite value in field evaluation")
    return np.array(out)


def _eval_vec(ast: ExprAst, env: dict, shape):
    if isinstance(ast, Const):
        return np.full(shape, ast.value)
    if isinstance(ast, Var):
        return env[ast.name]
    if isinstance(ast, Unary):
        a = _eval_vec(ast.arg, env, shape)
        if ast.op == "neg":
            return -a
        if ast.op == "abs":
            return np.abs(a)
        if ast.op == "exp":
            return np.exp(a)
        if ast.op == "sin":
            return np.sin(a)
        if ast.op == "cos":
            return np.cos(a)
        if ast.op == "sqrt":
            if np.any(a < 0):
                raise EvalError("sqrt of negative value")
            return np.sqrt(a)
    if isinstance(ast, Binary):
        a = _eval_vec(ast.left, env, shape)
        b = _eval_vec(ast.right, env, shape)
        if ast.op == "+":
            return a + b
        if ast.op == "-":
            return a - b
        if ast.op == "*":
            return a * b
        if ast.op == "/":
            if np.any(b == 0.0):
                raise EvalError("division by zero")
            return a / b
        if ast.op == "^":
            if np.any((a == 0.0) & (b < 0)):
                raise EvalError("zero raised to a negative power")
            if np.any((a < 0) & (b != np.trunc(b))):
                raise EvalError("negative base with non-integer exponent")
            return np.power(a, b)
        if ast.op == "min":
            return np.minimum(a, b)
        if ast.op == "max":
            return np.maximum(a, b)
    if isinstance(ast, Piecewise):
        s = _eval_vec(ast.selector, env, shape)
        out = np.broadcast_to(_eval_vec(ast.default, env, shape), np.shape(s)).copy()
        undecided = np.ones(np.shape(s), dtype=bool)
        for thr, val in zip(ast.thresholds, ast.values):
            hit = undecided & (s <= _eval_vec(thr, env, shape))
            out = np.where(hit, _eval_vec(val, env, shape), out)
            undecided &= ~hit
        return out
    raise AssertionError(type(ast))


def to_source(ast: ExprAst) -> str:
    """Render an AST back to source; parse(to_source(a)) evaluates like a."""
    if isinstance(ast, Const):
        return repr(ast.value)
    if isinstance(ast, Var):
        return ast.name
    if isinstance(ast, Unary):
        if ast.op == "neg":
            return f"(-{to_source(ast.arg)})"
        return f"{ast.op}({to_source(ast.arg)})"
    if isinstance(ast, Binary):
        if ast.op in BINARY_FUNCTIONS:
            return f"{ast.op}({to_source(ast.left)}, {to_source(ast.right)})"
        return f"({to_source(ast.left)} {ast.op} {to_source(ast.right)})"
    if isinstance(ast, Piecewise):
        parts = [to_source(ast.selector)]
        for thr, val in zip(ast.thresholds, ast.values):
            parts.append(to_source(thr))
            parts.append(to_source(val))
        parts.append(to_source(ast.default))
        return "piecewise(" + ", ".join(parts) + ")"
    raise AssertionError(type(ast))
