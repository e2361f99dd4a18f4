"""Closed intervals with dyadic endpoints and outward-rounded arithmetic.

Arithmetic takes an optional :class:`RoundingContext`; ``None`` means exact
dyadic arithmetic, which is only available for ``+``, ``-``, ``*`` and
integer powers.
"""

from __future__ import annotations

from typing import Sequence

from .dyadic import ZERO, ONE, Dyadic, Rounding, RoundingContext
from .errors import DivisionByZeroInterval

__all__ = [
    "Interval",
    "IntervalVector",
    "IntervalMatrix",
    "interval_arith",
    "interval_metrics",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "power",
    "hull",
    "hausdorff",
    "separation",
    "vector_width",
    "vector_midpoint",
]

_DOWN = Rounding.DOWN
_UP = Rounding.UP


class Interval:
    """Compact interval ``[lo, hi]`` with dyadic endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = lo if isinstance(lo, Dyadic) else Dyadic.coerce(lo)
        if hi is None:
            hi = lo
        else:
            hi = hi if isinstance(hi, Dyadic) else Dyadic.coerce(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Interval is immutable")

    @classmethod
    def point(cls, x) -> Interval:
        return cls(x, x)

    @classmethod
    def enclosing(cls, lo, hi, precision: int = 64) -> Interval:
        """Outward dyadic enclosure of the real interval between two rationals."""
        return _make(Dyadic.from_fraction(lo, precision, _DOWN),
                     Dyadic.from_fraction(hi, precision, _UP))

    # -- metrics -------------------------------------------------------------

    def width(self) -> Dyadic:
        return self.hi - self.lo

    def magnitude(self) -> Dyadic:
        """``max(|lo|, |hi|)``."""
        a, b = abs(self.lo), abs(self.hi)
        return a if a >= b else b

    def mignitude(self) -> Dyadic:
        """``min |x|`` over the interval."""
        if self.lo.mantissa > 0:
            return self.lo
        if self.hi.mantissa < 0:
            return -self.hi
        return ZERO

    def midpoint(self) -> Dyadic:
        return (self.lo + self.hi).half()

    def radius(self) -> Dyadic:
        return (self.hi - self.lo).half()

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        if isinstance(x, Interval):
            return self.lo <= x.lo and x.hi <= self.hi
        x = x if isinstance(x, Dyadic) else Dyadic.coerce(x)
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo.mantissa <= 0 <= self.hi.mantissa

    def is_positive(self) -> bool:
        return self.lo.mantissa > 0

    def is_negative(self) -> bool:
        return self.hi.mantissa < 0

    def intersect(self, other: Interval) -> Interval | None:
        lo = self.lo if self.lo >= other.lo else other.lo
        hi = self.hi if self.hi <= other.hi else other.hi
        if lo > hi:
            return None
        return _make(lo, hi)

    def rounded(self, ctx: RoundingContext | None) -> Interval:
        if ctx is None:
            return self
        p = ctx.precision_bits
        return _make(self.lo.round(p, _DOWN), self.hi.round(p, _UP))

    # -- exact operators -----------------------------------------------------

    def __add__(self, other) -> Interval:
        return add(self, _as_interval(other))

    __radd__ = __add__

    def __sub__(self, other) -> Interval:
        return sub(self, _as_interval(other))

    def __rsub__(self, other) -> Interval:
        return sub(_as_interval(other), self)

    def __mul__(self, other) -> Interval:
        return mul(self, _as_interval(other))

    __rmul__ = __mul__

    def __neg__(self) -> Interval:
        return _make(-self.hi, -self.lo)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __str__(self) -> str:
        return f"[{float(self.lo):.17g}, {float(self.hi):.17g}]"

    def as_floats(self) -> tuple[float, float]:
        return float(self.lo), float(self.hi)


def _make(lo: Dyadic, hi: Dyadic) -> Interval:
    iv = object.__new__(Interval)
    object.__setattr__(iv, "lo", lo)
    object.__setattr__(iv, "hi", hi)
    return iv


def _as_interval(x) -> Interval:
    if isinstance(x, Interval):
        return x
    d = Dyadic.coerce(x)
    return _make(d, d)


IntervalVector = tuple  # tuple[Interval, ...]
IntervalMatrix = tuple  # tuple[tuple[Interval, ...], ...]


# -- arithmetic ---------------------------------------------------------------


def _round(lo: Dyadic, hi: Dyadic, ctx: RoundingContext | None) -> Interval:
    if ctx is None:
        return _make(lo, hi)
    p = ctx.precision_bits
    return _make(lo.round(p, _DOWN), hi.round(p, _UP))


def add(a: Interval, b: Interval, ctx: RoundingContext | None = None) -> Interval:
    return _round(a.lo + b.lo, a.hi + b.hi, ctx)


def sub(a: Interval, b: Interval, ctx: RoundingContext | None = None) -> Interval:
    return _round(a.lo - b.hi, a.hi - b.lo, ctx)


def neg(a: Interval, ctx: RoundingContext | None = None) -> Interval:
    return _make(-a.hi, -a.lo)


def mul(a: Interval, b: Interval, ctx: RoundingContext | None = None) -> Interval:
    al, ah, bl, bh = a.lo, a.hi, b.lo, b.hi
    if al.mantissa >= 0 and bl.mantissa >= 0:
        return _round(al * bl, ah * bh, ctx)
    if ah.mantissa <= 0 and bh.mantissa <= 0:
        return _round(ah * bh, al * bl, ctx)
    if al == ah:
        if al.mantissa >= 0:
            return _round(al * bl, al * bh, ctx)
        return _round(al * bh, al * bl, ctx)
    if bl == bh:
        if bl.mantissa >= 0:
            return _round(al * bl, ah * bl, ctx)
        return _round(ah * bl, al * bl, ctx)
    p1, p2, p3, p4 = al * bl, al * bh, ah * bl, ah * bh
    lo = min(p1, p2, p3, p4)
    hi = max(p1, p2, p3, p4)
    return _round(lo, hi, ctx)


def scale(a: Interval, c: Dyadic, ctx: RoundingContext | None = None) -> Interval:
    if c.mantissa >= 0:
        return _round(a.lo * c, a.hi * c, ctx)
    return _round(a.hi * c, a.lo * c, ctx)


def reciprocal(b: Interval, ctx: RoundingContext) -> Interval:
    if b.contains_zero():
        raise DivisionByZeroInterval(f"divisor {b} contains zero")
    p = ctx.precision_bits
    return _make(ONE.div(b.hi, p, _DOWN), ONE.div(b.lo, p, _UP))


def div(a: Interval, b: Interval, ctx: RoundingContext) -> Interval:
    if ctx is None:
        raise ValueError("interval division requires a rounding context")
    if b.contains_zero():
        raise DivisionByZeroInterval(f"divisor {b} contains zero")
    p = ctx.precision_bits
    if b.lo == b.hi:
        c = b.lo
        if c.mantissa > 0:
            return _make(a.lo.div(c, p, _DOWN), a.hi.div(c, p, _UP))
        return _make(a.hi.div(c, p, _DOWN), a.lo.div(c, p, _UP))
    # endpoint candidates for the extremes of x/y over the box
    if b.lo.mantissa > 0:
        lo_num = a.lo
        lo_den = b.hi if a.lo.mantissa >= 0 else b.lo
        hi_num = a.hi
        hi_den = b.lo if a.hi.mantissa >= 0 else b.hi
    else:
        lo_num = a.hi
        lo_den = b.hi if a.hi.mantissa >= 0 else b.lo
        hi_num = a.lo
        hi_den = b.lo if a.lo.mantissa >= 0 else b.hi
    return _make(lo_num.div(lo_den, p, _DOWN), hi_num.div(hi_den, p, _UP))


def power(a: Interval, k: int, ctx: RoundingContext | None = None) -> Interval:
    """Integer power; negative exponents go through the reciprocal."""
    if k == 0:
        return _make(ONE, ONE)
    if k < 0:
        if ctx is None:
            raise ValueError("negative powers require a rounding context")
        return reciprocal(power(a, -k, ctx), ctx)
    if k == 1:
        return a.rounded(ctx)
    lo_p, hi_p = a.lo ** k, a.hi ** k
    if k % 2:
        return _round(lo_p, hi_p, ctx)
    if a.lo.mantissa >= 0:
        return _round(lo_p, hi_p, ctx)
    if a.hi.mantissa <= 0:
        return _round(hi_p, lo_p, ctx)
    return _round(ZERO, lo_p if lo_p >= hi_p else hi_p, ctx)


def interval_arith(op: str, a: Interval, b: Interval, ctx: RoundingContext | None) -> Interval:
    """Dispatch ``op`` in {'add', 'sub', 'mul', 'div'} with outward rounding at ``ctx``."""
    if op == "add":
        return add(a, b, ctx)
    if op == "sub":
        return sub(a, b, ctx)
    if op == "mul":
        return mul(a, b, ctx)
    if op == "div":
        return div(a, b, ctx)
    raise ValueError(f"unknown interval operation {op!r}")


# -- set operations and metrics ---------------------------------------------


def hull(*intervals: Interval) -> Interval:
    lo = min(iv.lo for iv in intervals)
    hi = max(iv.hi for iv in intervals)
    return _make(lo, hi)


def hausdorff(a: Interval, b: Interval) -> Dyadic:
    d1 = abs(a.lo - b.lo)
    d2 = abs(a.hi - b.hi)
    return d1 if d1 >= d2 else d2


def separation(a: Interval, b: Interval) -> Dyadic:
    if a.hi < b.lo:
        return b.lo - a.hi
    if b.hi < a.lo:
        return a.lo - b.hi
    return ZERO


def interval_metrics(a: Interval, b: Interval) -> dict:
    """Width and magnitude of ``a`` plus Hausdorff distance and separation of the pair."""
    return {
        "width": a.width(),
        "magnitude": a.magnitude(),
        "hausdorff": hausdorff(a, b),
        "separation": separation(a, b),
    }


def vector_width(box: Sequence[Interval]) -> Dyadic:
    """Largest component width (the common width for hypercubes)."""
    return max(iv.width() for iv in box)


def vector_midpoint(box: Sequence[Interval]) -> tuple[Dyadic, ...]:
    return tuple(iv.midpoint() for iv in box)


def vector_hausdorff(a: Sequence[Interval], b: Sequence[Interval]) -> Dyadic:
    return max(hausdorff(x, y) for x, y in zip(a, b))


def point_box(point: Sequence) -> tuple[Interval, ...]:
    return tuple(_as_interval(x) for x in point)


def box_contains(box: Sequence[Interval], other: Sequence[Interval]) -> bool:
    return all(b.contains(o) for b, o in zip(box, other))


def interiors_overlap(a: Sequence[Interval], b: Sequence[Interval]) -> bool:
    return all(x.lo < y.hi and y.lo < x.hi for x, y in zip(a, b))
