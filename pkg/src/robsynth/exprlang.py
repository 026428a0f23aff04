"""Dynamics expression language: parsing, evaluation, differentiation.

Expressions describe the components of a discrete-time map over state
variables x1..xn and input variables u1..um.  The same tree evaluates as
IEEE doubles, as an outward-rounded natural interval extension (the
inclusion function used by the reach computation), and symbolically for
Jacobian-based Lipschitz bounds.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .interval import (
    Box,
    Interval,
    interval_abs,
    interval_atan,
    interval_cos,
    interval_exp,
    interval_sin,
    interval_sqrt,
    interval_tan,
)

FUNCTIONS = ("sin", "cos", "tan", "atan", "exp", "sqrt", "abs", "neg")


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class EvalDomainError(ArithmeticError):
    """Evaluation hit a pole / domain edge; names the offending subexpression."""


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "u"
    index: int  # 0-based


@dataclass(frozen=True)
class Unary:
    op: str
    arg: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * /
    lhs: "ExprAst"
    rhs: "ExprAst"


@dataclass(frozen=True)
class Power:
    base: "ExprAst"
    exponent: int


ExprAst = Union[Const, Var, Unary, Binary, Power]


# ---------------------------------------------------------------------------
# tokenizer / parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line = 1
    line_start = 0
    pos = 0
    while pos < len(text):
        ch = text[pos]
        if ch == "\n":
            line += 1
            pos += 1
            line_start = pos
            continue
        if ch.isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {ch!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("end", "", line, len(text) - line_start + 1))
    return tokens


_VAR_RE = re.compile(r"^([xu])([1-9][0-9]*)$")


class _Parser:
    def __init__(self, tokens, n, m, bindings):
        self.tokens = tokens
        self.i = 0
        self.n = n
        self.m = m
        self.bindings = bindings  # name -> ExprAst (constants and defines)

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def take(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect_op(self, text: str):
        t = self.take()
        if t.kind != "op" or t.text != text:
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}",
                             t.line, t.col)

    def parse(self) -> ExprAst:
        node = self.expr()
        t = self.peek()
        if t.kind != "end":
            raise ParseError(f"unexpected trailing input {t.text!r}", t.line, t.col)
        return node

    def expr(self) -> ExprAst:
        node = self.term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.take().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> ExprAst:
        node = self.factor()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.take().text
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> ExprAst:
        node = self.base()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.take()
            sign = 1
            if self.peek().kind == "op" and self.peek().text == "-":
                self.take()
                sign = -1
            t = self.take()
            if t.kind != "num":
                raise ParseError("exponent must be an integer", t.line, t.col)
            value = float(t.text)
            if value != int(value):
                raise ParseError(f"non-integer exponent {t.text}", t.line, t.col)
            node = Power(node, sign * int(value))
        return node

    def base(self) -> ExprAst:
        t = self.take()
        if t.kind == "num":
            return Const(float(t.text))
        if t.kind == "op" and t.text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        if t.kind == "op" and t.text == "-":
            return Unary("neg", self.base())
        if t.kind == "ident":
            if t.text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Unary(t.text, arg)
            m = _VAR_RE.match(t.text)
            if m:
                kind, idx = m.group(1), int(m.group(2))
                limit = self.n if kind == "x" else self.m
                if idx > limit:
                    raise ParseError(f"unknown identifier {t.text!r} "
                                     f"(declared {kind}-dimension is {limit})",
                                     t.line, t.col)
                return Var(kind, idx - 1)
            if t.text in self.bindings:
                return self.bindings[t.text]
            raise ParseError(f"unknown identifier {t.text!r}", t.line, t.col)
        raise ParseError(f"expected expression, found {t.text or 'end of input'!r}",
                         t.line, t.col)


def parse_expr(text: str, n: int, m: int, bindings: Optional[dict] = None) -> ExprAst:
    """Parse an expression over x1..xn, u1..um and named bindings (inlined)."""
    return _Parser(_tokenize(text), n, m, dict(bindings or {})).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def pretty(node: ExprAst, parent_prec: int = 0) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return f"{node.kind}{node.index + 1}"
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"neg({pretty(node.arg)})"
        return f"{node.op}({pretty(node.arg)})"
    if isinstance(node, Power):
        base = pretty(node.base)
        if not (isinstance(node.base, Var) or isinstance(node.base, Unary)
                or (isinstance(node.base, Const) and node.base.value >= 0)):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    prec = _PREC[node.op]
    # right operand of - and / needs parens at equal precedence
    s = f"{pretty(node.lhs, prec)} {node.op} {pretty(node.rhs, prec + 1)}"
    return f"({s})" if prec < parent_prec else s


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def eval_real(node: ExprAst, x, u) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return float(x[node.index] if node.kind == "x" else u[node.index])
    if isinstance(node, Unary):
        a = eval_real(node.arg, x, u)
        try:
            if node.op == "neg":
                return -a
            if node.op == "sqrt" and a < 0.0:
                raise ValueError("sqrt of negative value")
            v = abs(a) if node.op == "abs" else getattr(math, node.op)(a)
        except (ValueError, OverflowError) as exc:
            raise EvalDomainError(f"{exc} in {pretty(node)}") from None
        if not math.isfinite(v):
            raise EvalDomainError(f"non-finite result in {pretty(node)}")
        return v
    if isinstance(node, Power):
        a = eval_real(node.base, x, u)
        if node.exponent < 0 and a == 0.0:
            raise EvalDomainError(f"zero base with negative exponent in {pretty(node)}")
        v = a ** node.exponent
        if not math.isfinite(v):
            raise EvalDomainError(f"non-finite result in {pretty(node)}")
        return v
    a = eval_real(node.lhs, x, u)
    b = eval_real(node.rhs, x, u)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if b == 0.0:
        raise EvalDomainError(f"division by zero in {pretty(node)}")
    return a / b


_IFUNCS = {
    "sin": interval_sin,
    "cos": interval_cos,
    "tan": interval_tan,
    "atan": interval_atan,
    "exp": interval_exp,
    "sqrt": interval_sqrt,
    "abs": interval_abs,
}


def eval_interval(node: ExprAst, x: Box, u: Box) -> Interval:
    """Natural interval extension; f(x, u) is contained in the result."""
    if isinstance(node, Const):
        return Interval.point(node.value)
    if isinstance(node, Var):
        box = x if node.kind == "x" else u
        return box.ivs[node.index]
    if isinstance(node, Unary):
        a = eval_interval(node.arg, x, u)
        if node.op == "neg":
            return -a
        try:
            return _IFUNCS[node.op](a)
        except (ValueError, ZeroDivisionError) as exc:
            raise EvalDomainError(f"{exc} in {pretty(node)}") from None
    if isinstance(node, Power):
        a = eval_interval(node.base, x, u)
        try:
            return a.pow_int(node.exponent)
        except ZeroDivisionError:
            raise EvalDomainError(f"zero crossing with negative exponent in "
                                  f"{pretty(node)}") from None
    a = eval_interval(node.lhs, x, u)
    b = eval_interval(node.rhs, x, u)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    try:
        return a / b
    except ZeroDivisionError:
        raise EvalDomainError(f"divisor interval contains zero in {pretty(node)}") from None


# Vectorized twin of eval_interval over batches of boxes.  Endpoints follow
# the same outward-rounding discipline; numpy transcendentals may differ from
# libm by one ulp, which the one-ulp widening still covers.

_TWO_PI = 2.0 * math.pi
_HALF_PI = 0.5 * math.pi


def _vdown(a):
    return np.nextafter(a, -np.inf)


def _vup(a):
    return np.nextafter(a, np.inf)


def _vhas_point(lo, hi, base, period):
    return np.floor((hi - base) / period) >= np.ceil((lo - base) / period)


def eval_interval_batch(node: ExprAst, xlo: np.ndarray, xhi: np.ndarray, u) -> tuple:
    """Interval evaluation over N boxes at once; xlo/xhi have shape (N, n).

    u is a concrete input point.  Returns (lo, hi) arrays of shape (N,).
    """
    if isinstance(node, Const):
        c = np.full(xlo.shape[0], node.value)
        return c, c.copy()
    if isinstance(node, Var):
        if node.kind == "x":
            return xlo[:, node.index].copy(), xhi[:, node.index].copy()
        c = np.full(xlo.shape[0], float(u[node.index]))
        return c, c.copy()
    if isinstance(node, Unary):
        alo, ahi = eval_interval_batch(node.arg, xlo, xhi, u)
        op = node.op
        if op == "neg":
            return -ahi, -alo
        if op == "sin":
            s_lo, s_hi = np.sin(alo), np.sin(ahi)
            hi = np.where(_vhas_point(alo, ahi, _HALF_PI, _TWO_PI),
                          1.0, _vup(np.maximum(s_lo, s_hi)))
            lo = np.where(_vhas_point(alo, ahi, -_HALF_PI, _TWO_PI),
                          -1.0, _vdown(np.minimum(s_lo, s_hi)))
            return lo, hi
        if op == "cos":
            c_lo, c_hi = np.cos(alo), np.cos(ahi)
            hi = np.where(_vhas_point(alo, ahi, 0.0, _TWO_PI),
                          1.0, _vup(np.maximum(c_lo, c_hi)))
            lo = np.where(_vhas_point(alo, ahi, math.pi, _TWO_PI),
                          -1.0, _vdown(np.minimum(c_lo, c_hi)))
            return lo, hi
        if op == "tan":
            if np.any(ahi - alo >= math.pi) or np.any(
                    _vhas_point(alo, ahi, _HALF_PI, math.pi)):
                raise EvalDomainError(f"tan pole inside a box in {pretty(node)}")
            t_lo, t_hi = np.tan(alo), np.tan(ahi)
            if np.any(t_lo > t_hi):
                raise EvalDomainError(f"tan pole inside a box in {pretty(node)}")
            return _vdown(t_lo), _vup(t_hi)
        if op == "atan":
            return _vdown(np.arctan(alo)), _vup(np.arctan(ahi))
        if op == "exp":
            return _vdown(np.exp(alo)), _vup(np.exp(ahi))
        if op == "sqrt":
            if np.any(alo < 0.0):
                raise EvalDomainError(f"sqrt below zero in {pretty(node)}")
            return _vdown(np.sqrt(alo)), _vup(np.sqrt(ahi))
        if op == "abs":
            lo = np.where(alo >= 0.0, alo, np.where(ahi <= 0.0, -ahi, 0.0))
            hi = np.where(alo >= 0.0, ahi, np.where(ahi <= 0.0, -alo,
                                                    np.maximum(-alo, ahi)))
            return lo, hi
        raise AssertionError(op)
    if isinstance(node, Power):
        alo, ahi = eval_interval_batch(node.base, xlo, xhi, u)
        n_exp = node.exponent
        if n_exp == 0:
            ones = np.ones_like(alo)
            return ones, ones.copy()
        neg = n_exp < 0
        k = abs(n_exp)
        a, b = alo ** k, ahi ** k
        if k % 2 == 1:
            lo, hi = _vdown(a), _vup(b)
        else:
            mixed = (alo < 0.0) & (ahi > 0.0)
            lo = np.where(alo >= 0.0, _vdown(a), np.where(ahi <= 0.0, _vdown(b), 0.0))
            hi = np.where(alo >= 0.0, _vup(b), np.where(ahi <= 0.0, _vup(a),
                                                        _vup(np.maximum(a, b))))
            del mixed
        if neg:
            if np.any((lo <= 0.0) & (hi >= 0.0)):
                raise EvalDomainError(f"zero crossing with negative exponent in "
                                      f"{pretty(node)}")
            cands = np.stack([1.0 / lo, 1.0 / hi])
            return _vdown(np.min(cands, axis=0)), _vup(np.max(cands, axis=0))
        return lo, hi
    llo, lhi = eval_interval_batch(node.lhs, xlo, xhi, u)
    rlo, rhi = eval_interval_batch(node.rhs, xlo, xhi, u)
    op = node.op
    if op == "+":
        return _vdown(llo + rlo), _vup(lhi + rhi)
    if op == "-":
        return _vdown(llo - rhi), _vup(lhi - rlo)
    if op == "*":
        cands = np.stack([llo * rlo, llo * rhi, lhi * rlo, lhi * rhi])
        return _vdown(np.min(cands, axis=0)), _vup(np.max(cands, axis=0))
    if np.any((rlo <= 0.0) & (rhi >= 0.0)):
        raise EvalDomainError(f"divisor interval contains zero in {pretty(node)}")
    cands = np.stack([llo / rlo, llo / rhi, lhi / rlo, lhi / rhi])
    return _vdown(np.min(cands, axis=0)), _vup(np.max(cands, axis=0))


# ---------------------------------------------------------------------------
# differentiation
# ---------------------------------------------------------------------------

_ZERO = Const(0.0)
_ONE = Const(1.0)


def _is_const(node, value=None):
    return isinstance(node, Const) and (value is None or node.value == value)


def simplify(node: ExprAst) -> ExprAst:
    if isinstance(node, (Const, Var)):
        return node
    if isinstance(node, Unary):
        a = simplify(node.arg)
        if node.op == "neg":
            if _is_const(a):
                return Const(-a.value)
            if isinstance(a, Unary) and a.op == "neg":
                return a.arg
        return Unary(node.op, a)
    if isinstance(node, Power):
        base = simplify(node.base)
        if node.exponent == 1:
            return base
        if node.exponent == 0:
            return _ONE
        if _is_const(base):
            v = base.value ** node.exponent
            if math.isfinite(v):
                return Const(v)
        return Power(base, node.exponent)
    a, b = simplify(node.lhs), simplify(node.rhs)
    op = node.op
    if _is_const(a) and _is_const(b):
        try:
            v = eval_real(Binary(op, a, b), (), ())
            return Const(v)
        except EvalDomainError:
            pass
    if op == "+":
        if _is_const(a, 0.0):
            return b
        if _is_const(b, 0.0):
            return a
    elif op == "-":
        if _is_const(b, 0.0):
            return a
        if _is_const(a, 0.0):
            return simplify(Unary("neg", b))
    elif op == "*":
        if _is_const(a, 0.0) or _is_const(b, 0.0):
            return _ZERO
        if _is_const(a, 1.0):
            return b
        if _is_const(b, 1.0):
            return a
    elif op == "/":
        if _is_const(a, 0.0) and not _is_const(b, 0.0):
            return _ZERO
        if _is_const(b, 1.0):
            return a
    return Binary(op, a, b)


def differentiate(node: ExprAst, kind: str, index: int) -> ExprAst:
    """Symbolic partial derivative with respect to x<index+1> or u<index+1>."""
    d = _diff(node, kind, index)
    return simplify(d)


def _diff(node: ExprAst, kind: str, index: int) -> ExprAst:
    if isinstance(node, Const):
        return _ZERO
    if isinstance(node, Var):
        return _ONE if (node.kind == kind and node.index == index) else _ZERO
    if isinstance(node, Unary):
        da = _diff(node.arg, kind, index)
        a = node.arg
        if node.op == "neg":
            return Unary("neg", da)
        if node.op == "sin":
            return Binary("*", Unary("cos", a), da)
        if node.op == "cos":
            return Unary("neg", Binary("*", Unary("sin", a), da))
        if node.op == "tan":
            sec2 = Binary("+", _ONE, Power(Unary("tan", a), 2))
            return Binary("*", sec2, da)
        if node.op == "atan":
            return Binary("/", da, Binary("+", _ONE, Power(a, 2)))
        if node.op == "exp":
            return Binary("*", Unary("exp", a), da)
        if node.op == "sqrt":
            return Binary("/", da, Binary("*", Const(2.0), Unary("sqrt", a)))
        if node.op == "abs":
            # sign(a) * da, undefined at zero like the true derivative
            return Binary("*", Binary("/", a, Unary("abs", a)), da)
        raise AssertionError(node.op)
    if isinstance(node, Power):
        db = _diff(node.base, kind, index)
        n_exp = node.exponent
        return Binary("*", Binary("*", Const(float(n_exp)),
                                  Power(node.base, n_exp - 1)), db)
    da = _diff(node.lhs, kind, index)
    db = _diff(node.rhs, kind, index)
    if node.op == "+":
        return Binary("+", da, db)
    if node.op == "-":
        return Binary("-", da, db)
    if node.op == "*":
        return Binary("+", Binary("*", da, node.rhs), Binary("*", node.lhs, db))
    num = Binary("-", Binary("*", da, node.rhs), Binary("*", node.lhs, db))
    return Binary("/", num, Power(node.rhs, 2))


# ---------------------------------------------------------------------------
# system models
# ---------------------------------------------------------------------------

class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class SystemModel:
    """Discrete-time map x(t+1) = f(x(t), u(t)) over compact box domains."""

    n: int
    m: int
    components: tuple
    X: Box
    U: Box
    lipschitz_override: Optional[float] = None
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.X.dims != self.n or self.U.dims != self.m:
            raise ModelError("domain dimensions do not match declared sizes")
        if len(self.components) != self.n:
            raise ModelError(f"expected {self.n} components, got {len(self.components)}")

    def step(self, x, u) -> tuple:
        return tuple(eval_real(c, x, u) for c in self.components)

    def image_box(self, xbox: Box, ubox: Box) -> Box:
        return Box(eval_interval(c, xbox, ubox) for c in self.components)


def parse_model(text: str) -> SystemModel:
    """Model file: states/inputs counts, constants, defines, domains, f<i> lines."""
    n = m = None
    bindings: dict = {}
    constants: dict = {}
    domains: dict = {}
    comps: dict = {}
    lipschitz = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        try:
            if head == "states":
                n = int(rest)
            elif head == "inputs":
                m = int(rest)
            elif head == "const":
                name, value = rest.split(None, 1)
                constants[name] = float(value)
                bindings[name] = Const(float(value))
            elif head == "define":
                if n is None or m is None:
                    raise ModelError("states/inputs must precede defines")
                name, expr_text = rest.split(None, 1)
                bindings[name] = parse_expr(expr_text, n, m, bindings)
            elif head == "domain":
                var, lo, hi = rest.split()
                domains[var] = Interval(float(lo), float(hi))
            elif head == "lipschitz":
                lipschitz = float(rest)
            elif re.fullmatch(r"f[1-9][0-9]*", head):
                if n is None or m is None:
                    raise ModelError("states/inputs must precede dynamics")
                expr_text = rest[1:].strip() if rest.startswith("=") else rest
                comps[int(head[1:])] = parse_expr(expr_text, n, m, bindings)
            else:
                raise ModelError(f"unknown directive {head!r}")
        except (ValueError, ParseError) as exc:
            raise ModelError(f"line {lineno}: {exc}") from None
    if n is None or m is None:
        raise ModelError("model must declare states and inputs")
    missing = [f"f{i}" for i in range(1, n + 1) if i not in comps]
    if missing:
        raise ModelError(f"missing dynamics components: {', '.join(missing)}")
    try:
        X = Box(domains[f"x{i}"] for i in range(1, n + 1))
        U = Box(domains[f"u{j}"] for j in range(1, m + 1))
    except KeyError as exc:
        raise ModelError(f"missing domain for {exc.args[0]}") from None
    return SystemModel(n, m, tuple(comps[i] for i in range(1, n + 1)), X, U,
                       lipschitz, constants)


def load_model(path) -> SystemModel:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_model(fh.read())


# ---------------------------------------------------------------------------
# Lipschitz bound
# ---------------------------------------------------------------------------

def lipschitz_bound(model: SystemModel, state_pad: float = 0.0,
                    input_pad: float = 0.0) -> float:
    """Upper bound on the uniform infinity-norm Lipschitz constant of f.

    Row sums of interval-evaluated Jacobian magnitudes over the padded
    domains, maximized separately over the state and input blocks, combined
    as the max.  Dominates every difference quotient on the padded boxes.
    """
    if model.lipschitz_override is not None:
        return model.lipschitz_override
    Xp = model.X.inflate(state_pad)
    Up = model.U.inflate(input_pad)
    l_x = l_u = 0.0
    for comp in model.components:
        row_x = row_u = 0.0
        for kind, dim in (("x", model.n), ("u", model.m)):
            for j in range(dim):
                part = differentiate(comp, kind, j)
                try:
                    iv = eval_interval(part, Xp, Up)
                except EvalDomainError as exc:
                    raise EvalDomainError(
                        f"Jacobian entry d/d{kind}{j + 1} has a pole over the "
                        f"padded domain ({exc}); shrink the domain or set a "
                        f"lipschitz override") from None
                if kind == "x":
                    row_x += iv.mag
                else:
                    row_u += iv.mag
        l_x = max(l_x, row_x)
        l_u = max(l_u, row_u)
    return max(l_x, l_u)
