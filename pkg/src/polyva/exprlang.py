"""A tiny expression language for target functions ``f(x1, ..., xd)``.

Grammar (``^`` binds tighter than unary minus and is right-associative)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | VAR | FUNC "(" expr ")" | "(" expr ")"

Variables are ``x1`` .. ``x9``; functions are sin, cos, exp, log, abs, sqrt.
Evaluation is vectorised over the rows of a point array.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "abs": np.abs,
    "sqrt": np.sqrt,
}

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))")


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, position: int, source: str):
        self.position = position
        self.source = source
        super().__init__(f"{message} at position {position}: {source!r}")


class ExprDomainError(ArithmeticError):
    """Evaluation left the real domain (log of a non-positive number, division by zero...)."""

    def __init__(self, message: str, point):
        self.point = point
        super().__init__(f"{message} at x = {point}")


class Expr:
    def __call__(self, X) -> np.ndarray:
        return evaluate(self, X)


@dataclass(frozen=True)
class Num(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based, as written


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr


def _tokenize(source: str):
    pos = 0
    out = []
    source = source.rstrip()
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if not m or m.end() == pos:
            raise ExprSyntaxError("unexpected character", pos, source)
        start = m.start(m.lastgroup)
        out.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    out.append(("end", "", len(source)))
    return out


class _Parser:
    def __init__(self, source: str, dim: int):
        self.source = source
        self.dim = dim
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.take()
        if text != value:
            raise ExprSyntaxError(f"expected {value!r}, found {text or 'end of input'!r}", pos, self.source)

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos, self.source)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            m = re.fullmatch(r"x([1-9])", text)
            if m:
                idx = int(m.group(1))
                if idx > self.dim:
                    raise ExprSyntaxError(f"variable {text} exceeds dimension {self.dim}", pos, self.source)
                return Var(idx)
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise ExprSyntaxError(f"unknown name {text!r}", pos, self.source)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        raise ExprSyntaxError(f"unexpected {text or 'end of input'!r}", pos, self.source)


def parse(source: str, d: int) -> Expr:
    """Parse ``source`` into an expression over ``x1 .. xd``."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0, source or "")
    if not 1 <= d <= 9:
        raise ValueError("dimension must be between 1 and 9")
    return _Parser(source, d).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_source(expr: Expr) -> str:
    """Render an expression; ``parse(to_source(e), d) == e``."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return f"x{expr.index}"
    if isinstance(expr, Neg):
        return f"-({to_source(expr.operand)})"
    if isinstance(expr, Call):
        return f"{expr.func}({to_source(expr.arg)})"
    if isinstance(expr, BinOp):
        return f"({to_source(expr.left)}{expr.op}{to_source(expr.right)})"
    raise TypeError(f"not an expression: {expr!r}")


def max_variable(expr: Expr) -> int:
    if isinstance(expr, Var):
        return expr.index
    if isinstance(expr, Num):
        return 0
    if isinstance(expr, Neg):
        return max_variable(expr.operand)
    if isinstance(expr, Call):
        return max_variable(expr.arg)
    return max(max_variable(expr.left), max_variable(expr.right))


def _fail(message, mask, X):
    i = int(np.flatnonzero(mask)[0])
    raise ExprDomainError(message, X[i].tolist())


def _eval(node, X):
    if isinstance(node, Num):
        return np.full(X.shape[0], node.value)
    if isinstance(node, Var):
        return X[:, node.index - 1]
    if isinstance(node, Neg):
        return -_eval(node.operand, X)
    if isinstance(node, Call):
        a = _eval(node.arg, X)
        if node.func == "log" and np.any(a <= 0):
            _fail("log of a non-positive number", a <= 0, X)
        if node.func == "sqrt" and np.any(a < 0):
            _fail("sqrt of a negative number", a < 0, X)
        return FUNCTIONS[node.func](a)
    a, b = _eval(node.left, X), _eval(node.right, X)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if np.any(b == 0):
            _fail("division by zero", b == 0, X)
        return a / b
    bad = (a < 0) & (b != np.round(b))
    if np.any(bad):
        _fail("non-integer power of a negative number", bad, X)
    bad = (a == 0) & (b < 0)
    if np.any(bad):
        _fail("zero raised to a negative power", bad, X)
    return np.power(a, b)


def evaluate(expr: Expr, X) -> np.ndarray:
    """Evaluate at every row of ``X`` (shape ``(K, d)``; a 1-D array is a single point)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] < max_variable(expr):
        raise ValueError(f"points have {X.shape[1]} coordinates, expression uses x{max_variable(expr)}")
    with np.errstate(over="ignore", under="ignore"):
        return _eval(expr, X)


def eval_point(expr: Expr, x) -> float:
    return float(evaluate(expr, np.asarray(x, dtype=float).reshape(1, -1))[0])
