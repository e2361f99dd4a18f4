"""Aligned boxes: subdivision cells of a dyadic hypercube, stored as integer coordinates.

Every geometric question the solver asks (containment in ``3B``, overlap of
outputs) reduces to integer comparisons on these coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

from .dyadic import Dyadic, Rounding
from .errors import MaxDepthExceeded
from .interval import Interval, _make

__all__ = ["ROI", "AlignedBox", "Face", "contained_in_dilated", "dilate_intervals",
           "faces_of_box"]

DILATIONS = (Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3))


def as_fraction(x) -> Fraction:
    """Exact rational value of a Dyadic, int, float, Fraction or decimal string."""
    return x.as_fraction() if isinstance(x, Dyadic) else Fraction(x)


@dataclass(frozen=True)
class ROI:
    """Region of interest: the dyadic hypercube ``B0`` with lower corner ``lo``."""

    lo: tuple[Dyadic, ...]
    width: Dyadic
    notes: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.width <= Dyadic(0):
            raise ValueError("ROI width must be positive")
        if not self.lo:
            raise ValueError("ROI needs at least one dimension")

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence], precision: int = 64) -> ROI:
        """Smallest dyadic hypercube containing the box ``[a_i, b_i]``.

        Non-dyadic corners are rounded outward once, and a non-cubical box
        is widened about its center to its longest side; both are noted.
        """
        notes = []
        los, his = [], []
        for a, b in bounds:
            fa, fb = Fraction(a), Fraction(b)
            if fa >= fb:
                raise ValueError(f"empty ROI side [{a}, {b}]")
            lo = Dyadic.from_fraction(fa, precision, Rounding.DOWN)
            hi = Dyadic.from_fraction(fb, precision, Rounding.UP)
            if lo.as_fraction() != fa or hi.as_fraction() != fb:
                notes.append(f"side [{a}, {b}] rounded outward to dyadic endpoints")
            los.append(lo)
            his.append(hi)
        widths = [h - l for l, h in zip(los, his)]
        w = max(widths)
        if any(x != w for x in widths):
            notes.append("ROI widened to a hypercube about its center")
            los = [(l + h - w).half() for l, h in zip(los, his)]
        return cls(tuple(los), w, tuple(notes))

    @property
    def n(self) -> int:
        return len(self.lo)

    def realize(self) -> tuple[Interval, ...]:
        return tuple(_make(l, l + self.width) for l in self.lo)

    def root(self) -> AlignedBox:
        return AlignedBox(0, (0,) * self.n, self)

    def dilated(self, k=2) -> tuple[Interval, ...]:
        return dilate_intervals(self.realize(), k)

    def locate(self, point: Sequence, depth: int) -> list[AlignedBox]:
        """Aligned boxes at ``depth`` whose closure contains ``point`` (at most ``2^n``)."""
        side = (self.width.ldexp(-depth)).as_fraction()
        choices = []
        top = (1 << depth) - 1
        for x, l in zip(point, self.lo):
            t = (as_fraction(x) - l.as_fraction()) / side
            if t < 0 or t > top + 1:
                return []
            k = int(t)  # floor for t >= 0
            opts = {min(k, top)}
            if t == k and k > 0:
                opts.add(k - 1)
            choices.append(sorted(opts))
        return [AlignedBox(depth, tuple(c), self) for c in product(*choices)]


@dataclass(frozen=True)
class AlignedBox:
    """Cell ``coords`` of the ``2^depth``-per-side grid over the ROI."""

    depth: int
    coords: tuple[int, ...]
    roi: ROI = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def side(self) -> Dyadic:
        return self.roi.width.ldexp(-self.depth)

    def realize(self) -> tuple[Interval, ...]:
        s = self.side
        return tuple(_make(l + s * k, l + s * (k + 1)) for l, k in zip(self.roi.lo, self.coords))

    def center(self) -> tuple[Dyadic, ...]:
        s = self.side
        return tuple(l + s * k + s.half() for l, k in zip(self.roi.lo, self.coords))

    def subdivide(self, max_depth: int | None = None) -> tuple[AlignedBox, ...]:
        if max_depth is not None and self.depth >= max_depth:
            raise MaxDepthExceeded(f"cannot subdivide below depth {max_depth}")
        d = self.depth + 1
        base = tuple(2 * k for k in self.coords)
        # last axis varies slowest, so n=2 children come out row by row
        return tuple(AlignedBox(d, tuple(b + o for b, o in zip(base, reversed(offs))), self.roi)
                     for offs in product((0, 1), repeat=self.n))

    def dilate(self, k=2) -> tuple[Interval, ...]:
        return dilate_intervals(self.realize(), k)

    def faces(self, k=2) -> tuple[Face, ...]:
        return faces_of_box(self.dilate(k))

    def contains_point(self, point: Sequence) -> bool:
        return all(iv.lo.as_fraction() <= as_fraction(x) <= iv.hi.as_fraction()
                   for iv, x in zip(self.realize(), point))

    def contains(self, other: AlignedBox) -> bool:
        if other.depth < self.depth:
            return False
        shift = other.depth - self.depth
        return all(o >> shift == k for o, k in zip(other.coords, self.coords))

    def interiors_disjoint(self, other: AlignedBox) -> bool:
        return not (self.contains(other) or other.contains(self))

    def sort_key(self) -> tuple:
        return (self.depth, self.coords)


def dilate_intervals(box: Sequence[Interval], k=2) -> tuple[Interval, ...]:
    """``kB``: same center, ``k`` times the width; exact for dyadic ``k``."""
    k = Fraction(k)
    if k <= 0 or k.denominator & (k.denominator - 1):
        raise ValueError(f"dilation factor {k} must be a positive dyadic rational")
    grow = Dyadic.coerce(Fraction(k - 1, 2))
    out = []
    for iv in box:
        d = (iv.hi - iv.lo) * grow
        out.append(_make(iv.lo - d, iv.hi + d))
    return tuple(out)


@dataclass(frozen=True)
class Face:
    """The ``side`` (+1 or -1) face of ``parent`` orthogonal to ``axis``."""

    parent: tuple[Interval, ...] = field(repr=False)
    axis: int
    side: int

    def realize(self) -> tuple[Interval, ...]:
        iv = self.parent[self.axis]
        c = iv.hi if self.side > 0 else iv.lo
        return self.parent[:self.axis] + (_make(c, c),) + self.parent[self.axis + 1:]

    def center(self) -> tuple[Dyadic, ...]:
        return tuple(iv.midpoint() for iv in self.realize())


def faces_of_box(box: Sequence[Interval]) -> tuple[Face, ...]:
    """The ``2n`` faces, ordered by axis, low side first."""
    box = tuple(box)
    return tuple(Face(box, i, s) for i in range(len(box)) for s in (-1, 1))


def contained_in_dilated(bq: AlignedBox, b: AlignedBox, k=3) -> bool:
    """Exact test of ``bq ⊆ k·b`` using integer coordinates at the finer depth."""
    k = Fraction(k)
    depth = max(bq.depth, b.depth)
    sq = 1 << (depth - bq.depth)
    sb = 1 << (depth - b.depth)
    # work in units of side/(2*den) at the common depth so every endpoint is integral
    den = k.denominator
    unit = 2 * den
    pad = (k - 1) * den * sb  # (k-1)/2 * side * unit
    if pad.denominator != 1:
        raise ValueError(f"dilation factor {k} is not supported")
    pad = int(pad)
    for cq, cb in zip(bq.coords, b.coords):
        q_lo, q_hi = cq * sq * unit, (cq + 1) * sq * unit
        b_lo, b_hi = cb * sb * unit - pad, (cb + 1) * sb * unit + pad
        if q_lo < b_lo or q_hi > b_hi:
            return False
    return True


def annulus(b: AlignedBox, k: int = 3) -> list[tuple[Interval, ...]]:
    """The ``k^n - 1`` same-size cells tiling ``kB`` minus ``B`` (odd ``k``)."""
    s = b.side
    r = (k - 1) // 2
    cells = []
    for offs in product(range(-r, r + 1), repeat=b.n):
        if not any(offs):
            continue
        cells.append(tuple(_make(l + s * (c + o), l + s * (c + o + 1))
                           for l, c, o in zip(b.roi.lo, b.coords, offs)))
    return cells
