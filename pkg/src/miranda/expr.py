"""Expression trees for the system components and their symbolic partials.

Nodes are hash-consed: structurally equal expressions are the same object,
so derivative memoization and shared-subexpression evaluation come for free.
"""

from __future__ import annotations

import ast
from fractions import Fraction
from functools import cached_property
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .dyadic import ONE, ZERO, Dyadic, Rounding, RoundingContext
from .elementary import cos_interval, exp_interval, sin_interval
from .errors import (
    DimensionMismatch,
    DivisionByZeroInterval,
    DomainError,
    ExpressionSyntaxError,
    PrecisionCeilingExceeded,
    UnknownFunction,
)
from .interval import Interval, _make, add, div, mul, neg, power, sub
from .linalg import symbolic_det_terms

__all__ = [
    "Expr",
    "FunctionSystem",
    "const",
    "var",
    "sin",
    "cos",
    "exp",
    "differentiate",
    "parse_expression",
    "evaluate_many",
    "eval_natural",
    "eval_point_certified",
    "eval_mean_value",
    "lipschitz_bound",
    "k_matrix",
]

FUNCTIONS = ("sin", "cos", "exp")


class Expr:
    """Immutable, interned expression node.

    ``op`` is one of var, const, add, sub, mul, div, neg, pow, sin, cos, exp.
    ``value`` holds the variable index, the dyadic constant, or the integer
    exponent.
    """

    __slots__ = ("op", "args", "value", "_hash", "_order")
    _table: dict = {}

    def __new__(cls, op: str, args: tuple = (), value=None):
        key = (op, value, args)
        node = cls._table.get(key)
        if node is not None:
            return node
        node = object.__new__(cls)
        object.__setattr__(node, "op", op)
        object.__setattr__(node, "args", args)
        object.__setattr__(node, "value", value)
        object.__setattr__(node, "_hash", hash(key))
        object.__setattr__(node, "_order", None)
        cls._table[key] = node
        return node

    def __setattr__(self, name, value):
        raise AttributeError("Expr is immutable")

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return self is other

    def __reduce__(self):
        return (Expr, (self.op, self.args, self.value))

    # operator sugar, mostly for tests and demos
    def __add__(self, other):
        return add_(self, _lift(other))

    def __radd__(self, other):
        return add_(_lift(other), self)

    def __sub__(self, other):
        return sub_(self, _lift(other))

    def __rsub__(self, other):
        return sub_(_lift(other), self)

    def __mul__(self, other):
        return mul_(self, _lift(other))

    def __rmul__(self, other):
        return mul_(_lift(other), self)

    def __truediv__(self, other):
        return div_(self, _lift(other))

    def __rtruediv__(self, other):
        return div_(_lift(other), self)

    def __neg__(self):
        return neg_(self)

    def __pow__(self, k: int):
        return pow_(self, k)

    def is_const(self, value=None) -> bool:
        if self.op != "const":
            return False
        return value is None or self.value == value

    def postorder(self) -> tuple[Expr, ...]:
        """Unique subexpressions, children before parents."""
        if self._order is None:
            seen: set = set()
            out: list = []
            stack = [(self, False)]
            while stack:
                node, expanded = stack.pop()
                if expanded:
                    out.append(node)
                    continue
                if node in seen:
                    continue
                seen.add(node)
                stack.append((node, True))
                for child in reversed(node.args):
                    if child not in seen:
                        stack.append((child, False))
            object.__setattr__(self, "_order", tuple(out))
        return self._order

    def variables(self) -> set[int]:
        return {node.value for node in self.postorder() if node.op == "var"}

    def to_string(self, names: Sequence[str] | None = None) -> str:
        return _format(self, names, 0)

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"Expr({self.to_string()!r})"


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}


def _format(e: Expr, names, parent: int) -> str:
    op = e.op
    if op == "var":
        text = names[e.value] if names else f"x{e.value + 1}"
        return text
    if op == "const":
        f = e.value.as_fraction()
        text = str(f.numerator) if f.denominator == 1 else f"({f})"
        return f"({text})" if f < 0 and parent else text
    if op in FUNCTIONS:
        return f"{op}({_format(e.args[0], names, 0)})"
    prec = _PREC[op]
    if op == "neg":
        text = "-" + _format(e.args[0], names, prec)
    elif op == "pow":
        text = f"{_format(e.args[0], names, prec + 1)}^{e.value}"
    else:
        sym = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}[op]
        left = _format(e.args[0], names, prec)
        right = _format(e.args[1], names, prec + (op in ("sub", "div")))
        text = left + sym + right
    return f"({text})" if prec < parent or (prec == parent and op == "neg") else text


# -- constructors with 0/1 absorption ----------------------------------------------


def const(value) -> Expr:
    return Expr("const", (), Dyadic.coerce(value))


def var(index: int) -> Expr:
    return Expr("var", (), int(index))


_ZERO = const(0)
_ONE = const(1)
_MINUS_ONE = Dyadic(-1)


def _lift(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, Fraction) and x.denominator & (x.denominator - 1):
        return div_(const(x.numerator), const(x.denominator))
    return const(x)


def add_(a: Expr, b: Expr) -> Expr:
    if a.is_const(ZERO):
        return b
    if b.is_const(ZERO):
        return a
    if a.op == "const" and b.op == "const":
        return const(a.value + b.value)
    return Expr("add", (a, b))


def sub_(a: Expr, b: Expr) -> Expr:
    if b.is_const(ZERO):
        return a
    if a.is_const(ZERO):
        return neg_(b)
    if a.op == "const" and b.op == "const":
        return const(a.value - b.value)
    return Expr("sub", (a, b))


def mul_(a: Expr, b: Expr) -> Expr:
    if a.is_const(ZERO) or b.is_const(ZERO):
        return _ZERO
    if a.is_const(ONE):
        return b
    if b.is_const(ONE):
        return a
    if a.op == "const" and b.op == "const":
        return const(a.value * b.value)
    if a.is_const(_MINUS_ONE):
        return neg_(b)
    if b.is_const(_MINUS_ONE):
        return neg_(a)
    return Expr("mul", (a, b))


def div_(a: Expr, b: Expr) -> Expr:
    if b.is_const(ONE):
        return a
    if a.is_const(ZERO) and not b.is_const(ZERO):
        return _ZERO
    if a.op == "const" and b.op == "const" and not b.is_const(ZERO):
        q = a.value.as_fraction() / b.value.as_fraction()
        if not q.denominator & (q.denominator - 1):  # fold only exact dyadic quotients
            return const(q)
    return Expr("div", (a, b))


def neg_(a: Expr) -> Expr:
    if a.op == "const":
        return const(-a.value)
    if a.op == "neg":
        return a.args[0]
    return Expr("neg", (a,))


def pow_(a: Expr, k: int) -> Expr:
    k = int(k)
    if k == 0:
        return _ONE
    if k == 1:
        return a
    if a.op == "const" and k > 0:
        return const(a.value ** k)
    return Expr("pow", (a,), k)


def sin(a: Expr) -> Expr:
    return Expr("sin", (_lift(a),))


def cos(a: Expr) -> Expr:
    return Expr("cos", (_lift(a),))


def exp(a: Expr) -> Expr:
    return Expr("exp", (_lift(a),))


# -- differentiation -------------------------------------------------------------------

_DERIVATIVES: dict = {}


def differentiate(e: Expr, index: int) -> Expr:
    """Symbolic partial derivative with respect to variable ``index``."""
    key = (e, index)
    hit = _DERIVATIVES.get(key)
    if hit is not None:
        return hit
    op, args = e.op, e.args
    if op == "var":
        out = _ONE if e.value == index else _ZERO
    elif op == "const":
        out = _ZERO
    elif index not in e.variables():
        out = _ZERO
    elif op == "add":
        out = add_(differentiate(args[0], index), differentiate(args[1], index))
    elif op == "sub":
        out = sub_(differentiate(args[0], index), differentiate(args[1], index))
    elif op == "neg":
        out = neg_(differentiate(args[0], index))
    elif op == "mul":
        a, b = args
        out = add_(mul_(differentiate(a, index), b), mul_(a, differentiate(b, index)))
    elif op == "div":
        a, b = args
        num = sub_(mul_(differentiate(a, index), b), mul_(a, differentiate(b, index)))
        out = div_(num, pow_(b, 2))
    elif op == "pow":
        a, k = args[0], e.value
        out = mul_(mul_(const(k), pow_(a, k - 1)), differentiate(a, index))
    elif op == "sin":
        out = mul_(cos(args[0]), differentiate(args[0], index))
    elif op == "cos":
        out = neg_(mul_(sin(args[0]), differentiate(args[0], index)))
    elif op == "exp":
        out = mul_(e, differentiate(args[0], index))
    else:  # pragma: no cover - closed set of ops
        raise ValueError(f"unknown op {op}")
    _DERIVATIVES[key] = out
    return out


# -- parsing ----------------------------------------------------------------------------


def parse_expression(text: str, names: Sequence[str]) -> Expr:
    """Parse infix source over the variables ``names``; ``^`` is exponentiation."""
    source = text.replace("^", "**")
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionSyntaxError(f"cannot parse {text!r}: {exc.msg}") from None
    index = {name: i for i, name in enumerate(names)}
    return _convert(tree.body, index, source.strip())


def _convert(node, index: dict, source: str) -> Expr:
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, ast.Pow):
            k = _integer_exponent(node.right, source)
            return pow_(_convert(node.left, index, source), k)
        a = _convert(node.left, index, source)
        b = _convert(node.right, index, source)
        if isinstance(node.op, ast.Add):
            return add_(a, b)
        if isinstance(node.op, ast.Sub):
            return sub_(a, b)
        if isinstance(node.op, ast.Mult):
            return mul_(a, b)
        if isinstance(node.op, ast.Div):
            return div_(a, b)
        raise ExpressionSyntaxError(f"unsupported operator {type(node.op).__name__}")
    if isinstance(node, ast.UnaryOp):
        inner = _convert(node.operand, index, source)
        if isinstance(node.op, ast.USub):
            return neg_(inner)
        if isinstance(node.op, ast.UAdd):
            return inner
        raise ExpressionSyntaxError(f"unsupported unary operator {type(node.op).__name__}")
    if isinstance(node, ast.Name):
        if node.id not in index:
            raise ExpressionSyntaxError(f"undeclared variable {node.id!r}")
        return var(index[node.id])
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        literal = ast.get_source_segment(source, node) or repr(node.value)
        return _lift(Fraction(literal))
    if isinstance(node, ast.Call):
        if not isinstance(node.func, ast.Name):
            raise ExpressionSyntaxError("only named functions may be called")
        name = node.func.id
        if name not in FUNCTIONS:
            raise UnknownFunction(f"unknown function {name!r}")
        if len(node.args) != 1 or node.keywords:
            raise ExpressionSyntaxError(f"{name} takes exactly one argument")
        return Expr(name, (_convert(node.args[0], index, source),))
    raise ExpressionSyntaxError(f"unsupported syntax: {ast.dump(node)[:60]}")


def _integer_exponent(node, source: str) -> int:
    sign = 1
    while isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        if isinstance(node.op, ast.USub):
            sign = -sign
        node = node.operand
    if isinstance(node, ast.Constant) and isinstance(node.value, int) \
            and not isinstance(node.value, bool):
        return sign * node.value
    raise ExpressionSyntaxError("exponents must be integer literals")


# -- evaluation ---------------------------------------------------------------------------


def evaluate_many(exprs: Iterable[Expr], box: Sequence[Interval], ctx: RoundingContext,
                  memo: dict | None = None) -> list[Interval]:
    """Natural interval extension of several expressions sharing one memo."""
    memo = {} if memo is None else memo
    out = []
    for e in exprs:
        if e not in memo:
            _evaluate_into(e, box, ctx, memo)
        out.append(memo[e])
    return out


def _evaluate_into(e: Expr, box, ctx, memo: dict) -> None:
    for node in e.postorder():
        if node in memo:
            continue
        op = node.op
        if op == "var":
            val = box[node.value]
        elif op == "const":
            c = node.value
            val = _make(c, c)
        elif op == "add":
            val = add(memo[node.args[0]], memo[node.args[1]], ctx)
        elif op == "sub":
            val = sub(memo[node.args[0]], memo[node.args[1]], ctx)
        elif op == "mul":
            a, b = node.args
            if a is b:
                val = power(memo[a], 2, ctx)
            else:
                val = mul(memo[a], memo[b], ctx)
        elif op == "div":
            try:
                val = div(memo[node.args[0]], memo[node.args[1]], ctx)
            except DivisionByZeroInterval as exc:
                raise DomainError(f"division by an interval containing 0 in {node}") from exc
        elif op == "neg":
            val = neg(memo[node.args[0]])
        elif op == "pow":
            try:
                val = power(memo[node.args[0]], node.value, ctx)
            except DivisionByZeroInterval as exc:
                raise DomainError(f"negative power of an interval containing 0 in {node}") from exc
        elif op == "sin":
            val = sin_interval(memo[node.args[0]], ctx)
        elif op == "cos":
            val = cos_interval(memo[node.args[0]], ctx)
        elif op == "exp":
            val = exp_interval(memo[node.args[0]], ctx)
        else:  # pragma: no cover
            raise ValueError(op)
        memo[node] = val


def eval_natural(e: Expr, box: Sequence[Interval], ctx: RoundingContext) -> Interval:
    """Recursive (natural) interval extension of ``e`` over ``box``."""
    return evaluate_many((e,), box, ctx)[0]


def _point_box(point) -> tuple[Interval, ...]:
    out = []
    for x in point:
        d = x if isinstance(x, Dyadic) else Dyadic.coerce(x)
        out.append(_make(d, d))
    return tuple(out)


def eval_point_certified_many(exprs: Sequence[Expr], point, tol, ctx: RoundingContext
                              ) -> list[Interval]:
    """Point enclosures of width <= ``tol`` each, escalating precision as needed."""
    if not isinstance(tol, Dyadic):
        tol = Dyadic.from_fraction(Fraction(tol), 64, Rounding.DOWN)
    pbox = _point_box(point)
    p = ctx.precision_bits
    while True:
        work = ctx if p == ctx.precision_bits else ctx.with_precision(p)
        vals = evaluate_many(exprs, pbox, work)
        if all(v.hi - v.lo <= tol for v in vals):
            return vals
        p *= 2
        if p > ctx.max_precision_bits:
            raise PrecisionCeilingExceeded(
                f"point evaluation did not reach width {float(tol):.3g} "
                f"within {ctx.max_precision_bits} bits")


def eval_point_certified(e: Expr, point, tol, ctx: RoundingContext) -> Interval:
    """Enclosure of ``e(point)`` of width at most ``tol``."""
    return eval_point_certified_many((e,), point, tol, ctx)[0]


def _default_point_tol(width: Dyadic, ctx: RoundingContext) -> Dyadic:
    if width.mantissa == 0:
        return Dyadic(1, -ctx.precision_bits // 2)
    return width.ldexp(-6)


def eval_mean_value(e: Expr, box: Sequence[Interval], ctx: RoundingContext, *,
                    tol: Dyadic | None = None, memo: dict | None = None) -> Interval:
    """Mean value form ``e(m) + grad e(box) . (box - m)`` with ``m`` the box center.

    Gradient enclosures are natural extensions; ``e(m)`` is a certified point
    value whose width budget defaults to 1/64 of the box width.
    """
    return eval_mean_value_many((e,), box, ctx, tol=tol, memo=memo)[0]


def eval_mean_value_many(exprs: Sequence[Expr], box: Sequence[Interval], ctx: RoundingContext,
                         *, tol: Dyadic | None = None, memo: dict | None = None
                         ) -> list[Interval]:
    n = len(box)
    center = tuple(iv.midpoint() for iv in box)
    width = max(iv.hi - iv.lo for iv in box)
    if tol is None:
        tol = _default_point_tol(width, ctx)
    values = eval_point_certified_many(exprs, center, tol, ctx)
    offsets = [(k, _make(box[k].lo - center[k], box[k].hi - center[k]))
               for k in range(n) if box[k].lo != box[k].hi]
    if not offsets:
        return values
    memo = {} if memo is None else memo
    grads_needed = [differentiate(e, k) for e in exprs for k, _ in offsets]
    grads = evaluate_many(grads_needed, box, ctx, memo)
    out = []
    g = iter(grads)
    for v in values:
        acc = v
        for _, off in offsets:
            acc = add(acc, mul(next(g), off, ctx), ctx)
        out.append(acc)
    return out


def lipschitz_bound(e: Expr, region: Sequence[Interval], ctx: RoundingContext) -> Dyadic:
    """``sum_k |natural(de/dx_k)(region)|``: a Lipschitz constant of the mean value form."""
    n = len(region)
    grads = evaluate_many([differentiate(e, k) for k in range(n)], region, ctx)
    total = ZERO
    for g in grads:
        total = total + g.magnitude()
    return total


# -- systems --------------------------------------------------------------------------------


@dataclass(frozen=True)
class FunctionSystem:
    """Square system ``f = (f_1..f_n)`` with its first and second partial tables."""

    names: tuple[str, ...]
    components: tuple[Expr, ...]
    first_partials: tuple[tuple[Expr, ...], ...] = field(repr=False, compare=False)
    second_partials: tuple[tuple[tuple[Expr, ...], ...], ...] = field(repr=False, compare=False)

    @classmethod
    def from_expressions(cls, names: Sequence[str], components: Sequence[Expr]
                         ) -> FunctionSystem:
        names = tuple(names)
        components = tuple(_lift(c) for c in components)
        n = len(names)
        if n < 1:
            raise DimensionMismatch("a system needs at least one variable")
        if len(components) != n:
            raise DimensionMismatch(
                f"{len(components)} component(s) for {n} variable(s); the system must be square")
        for c in components:
            bad = [i for i in c.variables() if i >= n]
            if bad:
                raise DimensionMismatch(f"component {c} references undeclared variables")
        first = tuple(tuple(differentiate(c, j) for j in range(n)) for c in components)
        second = tuple(tuple(tuple(differentiate(first[i][j], k) for k in range(n))
                             for j in range(n)) for i in range(n))
        return cls(names, components, first, second)

    @property
    def n(self) -> int:
        return len(self.names)

    @cached_property
    def jacobian_det(self) -> Expr:
        """Symbolic determinant of the Jacobian (Leibniz expansion)."""
        n = self.n
        total = _ZERO
        for sign, perm in symbolic_det_terms(n):
            term = _ONE
            for i in range(n):
                term = mul_(term, self.first_partials[i][perm[i]])
            total = add_(total, term) if sign > 0 else sub_(total, term)
        return total

    def __str__(self) -> str:
        lines = [f"vars {', '.join(self.names)}"]
        lines += [f"f{i + 1} = {c.to_string(self.names)}" for i, c in enumerate(self.components)]
        return "\n".join(lines)

    # float evaluation, for oracles and sampling only -------------------------------
    def numpy_function(self, exprs: Sequence[Expr] | None = None):
        exprs = self.components if exprs is None else tuple(exprs)

        def f(*coords):
            memo: dict = {}
            return [_eval_numpy(e, coords, memo) for e in exprs]
        return f


def _eval_numpy(e: Expr, coords, memo: dict):
    for node in e.postorder():
        if node in memo:
            continue
        op, a = node.op, node.args
        if op == "var":
            v = np.asarray(coords[node.value], dtype=float)
        elif op == "const":
            v = float(node.value)
        elif op == "add":
            v = memo[a[0]] + memo[a[1]]
        elif op == "sub":
            v = memo[a[0]] - memo[a[1]]
        elif op == "mul":
            v = memo[a[0]] * memo[a[1]]
        elif op == "div":
            with np.errstate(divide="ignore", invalid="ignore"):
                v = memo[a[0]] / memo[a[1]]
        elif op == "neg":
            v = -memo[a[0]]
        elif op == "pow":
            with np.errstate(divide="ignore", invalid="ignore"):
                v = np.power(memo[a[0]], float(node.value))
        elif op == "sin":
            v = np.sin(memo[a[0]])
        elif op == "cos":
            v = np.cos(memo[a[0]])
        else:
            with np.errstate(over="ignore"):
                v = np.exp(memo[a[0]])
        memo[node] = v
    return memo[e]


def eval_mpmath(e: Expr, point, prec: int = 200):
    """High-precision float evaluation through mpmath (an independent oracle)."""
    import mpmath

    with mpmath.workprec(prec):
        memo: dict = {}
        for node in e.postorder():
            op, a = node.op, node.args
            if op == "var":
                x = point[node.value]
                v = mpmath.mpf(x.as_fraction().numerator) / x.as_fraction().denominator \
                    if isinstance(x, Dyadic) else mpmath.mpf(x) if not isinstance(x, Fraction) \
                    else mpmath.mpf(x.numerator) / x.denominator
            elif op == "const":
                fr = node.value.as_fraction()
                v = mpmath.mpf(fr.numerator) / fr.denominator
            elif op == "add":
                v = memo[a[0]] + memo[a[1]]
            elif op == "sub":
                v = memo[a[0]] - memo[a[1]]
            elif op == "mul":
                v = memo[a[0]] * memo[a[1]]
            elif op == "div":
                v = memo[a[0]] / memo[a[1]]
            elif op == "neg":
                v = -memo[a[0]]
            elif op == "pow":
                v = memo[a[0]] ** node.value
            else:
                v = getattr(mpmath, op)(memo[a[0]])
            memo[node] = v
        return memo[e]


def k_matrix(system: FunctionSystem, region: Sequence[Interval], ctx: RoundingContext
             ) -> tuple[tuple[Dyadic, ...], ...]:
    """Curvature bounds ``K_ij = sum_k |d2 f_i / dx_j dx_k (region)|``."""
    n = system.n
    memo: dict = {}
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            vals = evaluate_many(system.second_partials[i][j], region, ctx, memo)
            s = ZERO
            for v in vals:
                s = s + v.magnitude()
            row.append(s)
        rows.append(tuple(row))
    return tuple(rows)


def dyadic_point(values: Sequence, precision: int = 64) -> tuple[Dyadic, ...]:
    """Nearest dyadic approximation of a real point (non-certified helper)."""
    out = []
    for v in values:
        if isinstance(v, Dyadic):
            out.append(v)
        elif isinstance(v, float):
            out.append(Dyadic.coerce(v))
        else:
            out.append(Dyadic.from_fraction(Fraction(v), precision, Rounding.NEAREST))
    return tuple(out)
