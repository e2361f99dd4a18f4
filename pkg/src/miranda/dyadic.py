"""Arbitrary-precision dyadic numbers ``m * 2**e`` and directed rounding.

Ring operations (``+``, ``-``, ``*``) are exact.  Everything that can leave
the dyadic ring (division, square roots, conversion from rationals) takes an
explicit precision and rounding direction.
"""

from __future__ import annotations

import enum
import math
import os
import re
from dataclasses import dataclass, replace
from fractions import Fraction

__all__ = [
    "Dyadic",
    "Rounding",
    "RoundingContext",
    "DEFAULT_PRECISION",
    "default_context",
    "dyadic_arith",
]


class Rounding(enum.Enum):
    DOWN = "toward-negative"
    UP = "toward-positive"
    OUTWARD = "outward"
    NEAREST = "nearest"


def _env_precision() -> int:
    raw = os.environ.get("MIRANDA_PRECISION")
    if raw is None:
        return 53
    value = int(raw)
    if value < 2:
        raise ValueError("MIRANDA_PRECISION must be at least 2")
    return value


DEFAULT_PRECISION = _env_precision()


@dataclass(frozen=True)
class RoundingContext:
    """Target relative precision plus rounding mode.

    ``max_precision_bits`` is the ceiling used by every precision-escalation
    loop; ``check_accuracy`` turns on the high-precision cross-check of
    effective box forms.
    """

    precision_bits: int = DEFAULT_PRECISION
    mode: Rounding = Rounding.OUTWARD
    max_precision_bits: int = 4096
    check_accuracy: bool = True

    def __post_init__(self):
        if self.precision_bits < 2:
            raise ValueError("precision_bits must be >= 2")
        if self.max_precision_bits < self.precision_bits:
            raise ValueError("max_precision_bits must be >= precision_bits")

    def with_precision(self, bits: int) -> RoundingContext:
        bits = max(2, int(bits))
        return replace(self, precision_bits=bits,
                       max_precision_bits=max(self.max_precision_bits, bits))

    def doubled(self) -> RoundingContext:
        return self.with_precision(2 * self.precision_bits)


def default_context() -> RoundingContext:
    return RoundingContext(precision_bits=_env_precision())


_HEX_RE = re.compile(r"^([+-]?)0x([0-9a-fA-F]+)p([+-]?\d+)$")


class Dyadic:
    """Exact binary number ``mantissa * 2**exponent`` with odd (or zero) mantissa."""

    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int = 0, exponent: int = 0):
        m = int(mantissa)
        e = int(exponent)
        if m == 0:
            e = 0
        else:
            tz = (m & -m).bit_length() - 1
            if tz:
                m >>= tz
                e += tz
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    def __setattr__(self, name, value):
        raise AttributeError("Dyadic is immutable")

    # -- construction ------------------------------------------------------

    @classmethod
    def coerce(cls, value) -> Dyadic:
        """Exact conversion from int, float, dyadic Fraction or Dyadic."""
        if isinstance(value, Dyadic):
            return value
        if isinstance(value, bool):
            return cls(int(value))
        if isinstance(value, int):
            return cls(value)
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ValueError(f"cannot represent {value!r} as a dyadic")
            num, den = value.as_integer_ratio()
            return cls(num, -(den.bit_length() - 1))
        if isinstance(value, Fraction):
            den = value.denominator
            if den & (den - 1):
                raise ValueError(f"{value} is not dyadic; use Dyadic.from_fraction")
            return cls(value.numerator, -(den.bit_length() - 1))
        if isinstance(value, str):
            return cls.from_hex(value)
        raise TypeError(f"cannot convert {type(value).__name__} to Dyadic")

    @classmethod
    def from_fraction(cls, value, precision: int, mode: Rounding) -> Dyadic:
        """Round an arbitrary rational to ``precision`` bits in direction ``mode``."""
        value = Fraction(value)
        den = value.denominator
        if not den & (den - 1):
            return cls.coerce(value).round(precision, mode)
        return cls(value.numerator).div(cls(den), precision, mode)

    @classmethod
    def from_hex(cls, text: str) -> Dyadic:
        match = _HEX_RE.match(text.strip())
        if not match:
            raise ValueError(f"malformed dyadic string {text!r}")
        sign, digits, exp = match.groups()
        m = int(digits, 16)
        return cls(-m if sign == "-" else m, int(exp))

    # -- inspection ----------------------------------------------------------

    def is_zero(self) -> bool:
        return self.mantissa == 0

    def sign(self) -> int:
        return (self.mantissa > 0) - (self.mantissa < 0)

    def as_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def __float__(self) -> float:
        try:
            return math.ldexp(float(self.mantissa), self.exponent)
        except OverflowError:
            return math.copysign(math.inf, self.mantissa)

    def to_hex(self) -> str:
        m = self.mantissa
        sign = "-" if m < 0 else ""
        return f"{sign}0x{abs(m):x}p{self.exponent}"

    def magnitude_exponent(self) -> int:
        """``floor(log2 |x|)``; raises for zero."""
        if self.mantissa == 0:
            raise ValueError("log2 of zero")
        return abs(self.mantissa).bit_length() - 1 + self.exponent

    def __repr__(self) -> str:
        return f"Dyadic({self.mantissa}, {self.exponent})"

    def __str__(self) -> str:
        if self.exponent >= 0:
            return str(self.mantissa << self.exponent)
        return f"{self.mantissa}/2^{-self.exponent}"

    def __hash__(self) -> int:
        return hash((self.mantissa, self.exponent))

    def __bool__(self) -> bool:
        return self.mantissa != 0

    # -- exact ring ops --------------------------------------------------------

    def __add__(self, other) -> Dyadic:
        if not isinstance(other, Dyadic):
            if isinstance(other, int):
                other = Dyadic(other)
            else:
                return NotImplemented
        m1, e1, m2, e2 = self.mantissa, self.exponent, other.mantissa, other.exponent
        if m1 == 0:
            return other
        if m2 == 0:
            return self
        if e1 <= e2:
            return Dyadic(m1 + (m2 << (e2 - e1)), e1)
        return Dyadic((m1 << (e1 - e2)) + m2, e2)

    __radd__ = __add__

    def __neg__(self) -> Dyadic:
        return _raw(-self.mantissa, self.exponent)

    def __pos__(self) -> Dyadic:
        return self

    def __abs__(self) -> Dyadic:
        return self if self.mantissa >= 0 else _raw(-self.mantissa, self.exponent)

    def __sub__(self, other) -> Dyadic:
        if not isinstance(other, Dyadic):
            if isinstance(other, int):
                other = Dyadic(other)
            else:
                return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> Dyadic:
        return Dyadic.coerce(other) - self

    def __mul__(self, other) -> Dyadic:
        if not isinstance(other, Dyadic):
            if isinstance(other, int):
                other = Dyadic(other)
            else:
                return NotImplemented
        # product of odd mantissas is odd: already canonical
        m = self.mantissa * other.mantissa
        if m == 0:
            return ZERO
        return _raw(m, self.exponent + other.exponent)

    __rmul__ = __mul__

    def ldexp(self, k: int) -> Dyadic:
        """Exact multiplication by ``2**k``."""
        if self.mantissa == 0:
            return self
        return _raw(self.mantissa, self.exponent + k)

    def half(self) -> Dyadic:
        return self.ldexp(-1)

    def __pow__(self, k: int) -> Dyadic:
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        return _raw(self.mantissa ** k, self.exponent * k) if self.mantissa else (ONE if k == 0 else ZERO)

    # -- comparison ----------------------------------------------------------

    def _cmp(self, other: Dyadic) -> int:
        m1, m2 = self.mantissa, other.mantissa
        s1, s2 = (m1 > 0) - (m1 < 0), (m2 > 0) - (m2 < 0)
        if s1 != s2:
            return -1 if s1 < s2 else 1
        if s1 == 0:
            return 0
        e1, e2 = self.exponent, other.exponent
        # compare magnitudes by leading bit position first
        l1 = abs(m1).bit_length() + e1
        l2 = abs(m2).bit_length() + e2
        if l1 != l2:
            bigger = 1 if l1 > l2 else -1
            return bigger * s1
        if e1 <= e2:
            d = m1 - (m2 << (e2 - e1))
        else:
            d = (m1 << (e1 - e2)) - m2
        return (d > 0) - (d < 0)

    def __eq__(self, other) -> bool:
        if isinstance(other, Dyadic):
            return self.mantissa == other.mantissa and self.exponent == other.exponent
        if isinstance(other, int) and not isinstance(other, bool):
            return self == Dyadic(other)
        if isinstance(other, Fraction):
            return self.as_fraction() == other
        return NotImplemented

    def __lt__(self, other) -> bool:
        return self._cmp(_as_dyadic(other)) < 0

    def __le__(self, other) -> bool:
        return self._cmp(_as_dyadic(other)) <= 0

    def __gt__(self, other) -> bool:
        return self._cmp(_as_dyadic(other)) > 0

    def __ge__(self, other) -> bool:
        return self._cmp(_as_dyadic(other)) >= 0

    # -- rounding ------------------------------------------------------------

    def round(self, precision: int | None, mode: Rounding) -> Dyadic:
        """Round the mantissa to at most ``precision`` bits.

        ``OUTWARD`` is meaningless for a lone scalar and is rejected.
        """
        if precision is None:
            return self
        m = self.mantissa
        bl = abs(m).bit_length()
        if bl <= precision:
            return self
        k = bl - precision
        if mode is Rounding.DOWN:
            m = m >> k
        elif mode is Rounding.UP:
            m = -((-m) >> k)
        elif mode is Rounding.NEAREST:
            m = (m + (1 << (k - 1))) >> k
        else:
            raise ValueError("scalar rounding needs a directed or nearest mode")
        return Dyadic(m, self.exponent + k)

    def div(self, other: Dyadic, precision: int, mode: Rounding) -> Dyadic:
        """Quotient rounded to ``precision`` bits."""
        other = _as_dyadic(other)
        if mode is Rounding.OUTWARD:
            raise ValueError("scalar division needs a directed or nearest mode")
        if other.mantissa == 0:
            raise ZeroDivisionError("dyadic division by zero")
        if self.mantissa == 0:
            return ZERO
        ma, mb = self.mantissa, other.mantissa
        shift = max(0, precision + 2 + abs(mb).bit_length() - abs(ma).bit_length())
        num = ma << shift
        if mb < 0:
            num, mb = -num, -mb
        q, r = divmod(num, mb)
        exp = self.exponent - shift - other.exponent
        if r == 0:
            return Dyadic(q, exp).round(precision, mode)
        if mode is Rounding.DOWN:
            out = Dyadic(q, exp)
        elif mode is Rounding.UP:
            out = Dyadic(q + 1, exp)
        else:
            out = Dyadic(q + (2 * r >= mb), exp)
        # q carries >= precision+1 bits, so a second directed rounding stays on the right side
        return out.round(precision, mode)

    def sqrt(self, precision: int, mode: Rounding) -> Dyadic:
        if self.mantissa < 0:
            raise ValueError("square root of a negative dyadic")
        if self.mantissa == 0:
            return ZERO
        m, e = self.mantissa, self.exponent
        shift = 2 * precision + 4
        if (e - shift) % 2:
            shift += 1
        n = m << shift
        s = math.isqrt(n)
        exp = (e - shift) // 2
        exact = s * s == n
        if mode is Rounding.UP and not exact:
            s += 1
        elif mode is Rounding.NEAREST and not exact and (s * s + s) < n:
            s += 1
        elif mode not in (Rounding.UP, Rounding.DOWN, Rounding.NEAREST):
            raise ValueError("scalar sqrt needs a directed or nearest mode")
        return Dyadic(s, exp).round(precision, mode)

    def floor(self) -> int:
        if self.exponent >= 0:
            return self.mantissa << self.exponent
        return self.mantissa >> -self.exponent

    def ceil(self) -> int:
        return -((-self).floor())


def _raw(m: int, e: int) -> Dyadic:
    d = object.__new__(Dyadic)
    object.__setattr__(d, "mantissa", m)
    object.__setattr__(d, "exponent", e)
    return d


def _as_dyadic(value) -> Dyadic:
    return value if isinstance(value, Dyadic) else Dyadic.coerce(value)


ZERO = Dyadic(0)
ONE = Dyadic(1)


def dyadic_arith(op: str, a: Dyadic, b: Dyadic) -> Dyadic:
    """Exact ring operation ``op`` in {'add', 'sub', 'mul'}."""
    a, b = _as_dyadic(a), _as_dyadic(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unsupported exact dyadic operation {op!r}")
