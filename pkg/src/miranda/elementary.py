"""Certified enclosures of pi, exp, sin and cos.

Point values come from Taylor polynomials evaluated in outward interval
arithmetic at a guarded precision, plus an explicit bound on the truncated
tail.  Interval extensions use monotonicity (exp) or locate the extrema of
sin/cos with a pi enclosure.
"""

from __future__ import annotations

from functools import lru_cache

from .dyadic import ONE, ZERO, Dyadic, Rounding, RoundingContext
from .interval import Interval, _make, add, div, hull, mul, scale, sub

__all__ = ["pi_interval", "exp_interval", "sin_interval", "cos_interval"]

_GUARD = 24


@lru_cache(maxsize=64)
def _arctan_inv_fixed(k: int, bits: int) -> tuple[int, int]:
    """Integer bounds ``(lo, hi)`` on ``arctan(1/k) * 2**bits``."""
    scale_ = 1 << bits
    lo = hi = 0
    term = scale_ // k
    k2 = k * k
    j = 0
    while term:
        t_lo = term // (2 * j + 1)
        if j % 2 == 0:
            lo += t_lo
            hi += t_lo + 1
        else:
            lo -= t_lo + 1
            hi -= t_lo
        term //= k2
        j += 1
    # each floor on `term` lost < 1 unit per step; the tail is below the last term
    slack = j + 2
    return lo - slack, hi + slack


@lru_cache(maxsize=32)
def _pi_cached(precision: int) -> Interval:
    bits = precision + _GUARD
    a_lo, a_hi = _arctan_inv_fixed(5, bits)
    b_lo, b_hi = _arctan_inv_fixed(239, bits)
    lo = 16 * a_lo - 4 * b_hi
    hi = 16 * a_hi - 4 * b_lo
    iv = _make(Dyadic(lo, -bits), Dyadic(hi, -bits))
    return iv.rounded(RoundingContext(precision_bits=precision))


def pi_interval(ctx: RoundingContext) -> Interval:
    """Enclosure of pi via Machin's formula."""
    return _pi_cached(ctx.precision_bits)


# -- exp ------------------------------------------------------------------------


@lru_cache(maxsize=8192)
def _exp_point(x: Dyadic, precision: int) -> Interval:
    if x.mantissa == 0:
        return _make(ONE, ONE)
    # halve until |r| <= 1/2, then square back up
    s = max(0, x.magnitude_exponent() + 2)
    work = RoundingContext(precision_bits=precision + _GUARD + 2 * s)
    r = _make(x.ldexp(-s), x.ldexp(-s))
    total = _make(ONE, ONE)
    term = _make(ONE, ONE)
    k = 1
    limit = Dyadic(1, -(work.precision_bits + 2))
    while True:
        term = div(mul(term, r, work), _make(Dyadic(k), Dyadic(k)), work)
        total = add(total, term, work)
        k += 1
        if term.magnitude() < limit:
            break
    # next term is bounded by |term|/2 and the tail by twice that
    tail = term.magnitude()
    total = _make(total.lo - tail, total.hi + tail)
    for _ in range(s):
        total = mul(total, total, work)
    return total.rounded(RoundingContext(precision_bits=precision))


def exp_interval(a: Interval, ctx: RoundingContext) -> Interval:
    p = ctx.precision_bits
    lo = _exp_point(a.lo, p).lo
    hi = _exp_point(a.hi, p).hi if a.hi != a.lo else _exp_point(a.lo, p).hi
    if lo.mantissa < 0:
        lo = ZERO
    return _make(lo, hi)


# -- sin / cos ------------------------------------------------------------------


def _reduce(x: Dyadic, work: RoundingContext) -> tuple[Interval, int]:
    """``x - 2*pi*k`` as an interval, with ``k`` the nearest multiple."""
    k = round(float(x) / 6.283185307179586) if abs(float(x)) > 3 else 0
    if k == 0:
        return _make(x, x), 0
    two_pi_k = scale(pi_interval(work), Dyadic(2 * k), work)
    return sub(_make(x, x), two_pi_k, work), k


def _taylor_sin_cos(r: Interval, work: RoundingContext, odd: bool) -> Interval:
    """Alternating series for sin (odd) or cos (even) with a certified tail."""
    rr = mul(r, r, work)
    term = r if odd else _make(ONE, ONE)
    total = term
    k = 1 if odd else 0
    limit = Dyadic(1, -(work.precision_bits + 2))
    sign = 1
    while True:
        denom = Dyadic((k + 1) * (k + 2))
        term = div(mul(term, rr, work), _make(denom, denom), work)
        k += 2
        sign = -sign
        total = add(total, term, work) if sign > 0 else sub(total, term, work)
        mag = term.magnitude()
        if mag < limit and k > 2 * r.magnitude().floor() + 4:
            break
    # |tail| <= |r|^(k+2)/(k+2)! <= |term| * |r|^2/((k+1)(k+2))
    tail = mul(term, rr, work).magnitude().div(Dyadic((k + 1) * (k + 2)), work.precision_bits,
                                             Rounding.UP)
    return _make(total.lo - tail, total.hi + tail)


@lru_cache(maxsize=16384)
def _sin_cos_point(x: Dyadic, precision: int, odd: bool) -> Interval:
    if x.mantissa == 0:
        return _make(ZERO, ZERO) if odd else _make(ONE, ONE)
    mag_bits = max(0, x.magnitude_exponent() + 1)
    work = RoundingContext(precision_bits=precision + _GUARD + mag_bits)
    r, _ = _reduce(x, work)
    out = _taylor_sin_cos(r, work, odd).rounded(RoundingContext(precision_bits=precision))
    minus_one, one = Dyadic(-1), ONE
    lo = out.lo if out.lo >= minus_one else minus_one
    hi = out.hi if out.hi <= one else one
    return _make(lo, hi)


def _contains_phase(a: Interval, offset_over_pi: Dyadic, ctx: RoundingContext) -> bool:
    """Whether ``a`` may contain a point ``offset*pi + 2*k*pi`` for an integer k."""
    work = ctx.with_precision(ctx.precision_bits + _GUARD)
    pi = pi_interval(work)
    two_pi = scale(pi, Dyadic(2), work)
    shifted = sub(a, scale(pi, offset_over_pi, work), work)
    t = div(shifted, two_pi, work)
    return t.lo.ceil() <= t.hi.floor()


def _periodic(a: Interval, ctx: RoundingContext, odd: bool) -> Interval:
    p = ctx.precision_bits
    pi_lo = pi_interval(ctx).lo
    if a.width() >= pi_lo.ldexp(1):
        return _make(Dyadic(-1), ONE)
    if a.lo == a.hi:
        return _sin_cos_point(a.lo, p, odd)
    out = hull(_sin_cos_point(a.lo, p, odd), _sin_cos_point(a.hi, p, odd))
    # sin peaks at pi/2, troughs at -pi/2; cos peaks at 0, troughs at pi
    peak, trough = (Dyadic(1, -1), Dyadic(-1, -1)) if odd else (ZERO, ONE)
    lo, hi = out.lo, out.hi
    if _contains_phase(a, peak, ctx):
        hi = ONE
    if _contains_phase(a, trough, ctx):
        lo = Dyadic(-1)
    return _make(lo, hi)


def sin_interval(a: Interval, ctx: RoundingContext) -> Interval:
    return _periodic(a, ctx, odd=True)


def cos_interval(a: Interval, ctx: RoundingContext) -> Interval:
    return _periodic(a, ctx, odd=False)
