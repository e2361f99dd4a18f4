from __future__ import annotations

import random
from fractions import Fraction

import pytest

from miranda.boxes import (ROI, AlignedBox, annulus, contained_in_dilated, dilate_intervals,
                           faces_of_box)
from miranda.dyadic import Dyadic
from miranda.errors import MaxDepthExceeded
from miranda.interval import Interval, interiors_overlap


def sides(box):
    return [(iv.lo.as_fraction(), iv.hi.as_fraction()) for iv in box]


def F(*a):
    return Fraction(*a)


UNIT2 = ROI.from_bounds([(0, 1), (0, 1)])


def test_roi_and_realize_examples():
    roi = ROI.from_bounds([(0, 1)])
    assert sides(roi.root().realize()) == [(0, 1)]
    assert sides(AlignedBox(3, (5,), roi).realize()) == [(F(5, 8), F(6, 8))]
    assert AlignedBox(3, (5,), roi).side == Dyadic(1, -3)


def test_roi_ingestion_notes():
    roi = ROI.from_bounds([(0, 1), (0, 2)])
    assert roi.width == Dyadic(2)
    assert sides(roi.realize()) == [(F(-1, 2), F(3, 2)), (0, 2)]
    assert any("hypercube" in note for note in roi.notes)
    roi = ROI.from_bounds([(0, F(1, 3))])
    assert roi.realize()[0].hi.as_fraction() >= F(1, 3)
    assert any("outward" in note for note in roi.notes)
    with pytest.raises(ValueError):
        ROI.from_bounds([(1, 1)])


def test_subdivide_examples():
    kids = UNIT2.root().subdivide()
    assert [sides(k.realize()) for k in kids] == [
        [(0, F(1, 2)), (0, F(1, 2))],
        [(F(1, 2), 1), (0, F(1, 2))],
        [(0, F(1, 2)), (F(1, 2), 1)],
        [(F(1, 2), 1), (F(1, 2), 1)],
    ]
    assert all(k.depth == 1 for k in kids)
    line = ROI.from_bounds([(0, 1)]).root().subdivide()
    assert [sides(k.realize()) for k in line] == [[(0, F(1, 2))], [(F(1, 2), 1)]]
    with pytest.raises(MaxDepthExceeded):
        AlignedBox(4, (0, 0), UNIT2).subdivide(max_depth=4)


def test_dilation_examples():
    b = UNIT2.root()
    assert sides(b.dilate(2)) == [(F(-1, 2), F(3, 2))] * 2
    assert sides(ROI.from_bounds([(0, 1)]).root().dilate(3)) == [(-1, 2)]
    assert b.dilate(1) == b.realize()
    assert sides(b.dilate(F(3, 2))) == [(F(-1, 4), F(5, 4))] * 2
    with pytest.raises(ValueError):
        dilate_intervals(b.realize(), F(4, 3))


def test_face_examples():
    faces = UNIT2.root().faces(2)
    assert [(f.axis, f.side) for f in faces] == [(0, -1), (0, 1), (1, -1), (1, 1)]
    plus = faces[1].realize()
    assert sides(plus) == [(F(3, 2), F(3, 2)), (F(-1, 2), F(3, 2))]
    assert faces[1].center() == (Dyadic(3, -1), Dyadic(1, -1))
    line = faces_of_box(ROI.from_bounds([(0, 1)]).root().dilate(2))
    assert [sides(f.realize()) for f in line] == [[(F(-1, 2), F(-1, 2))], [(F(3, 2), F(3, 2))]]


def test_contained_in_dilated_examples():
    roi = ROI.from_bounds([(0, 4), (0, 4)])
    b = AlignedBox(2, (0, 0), roi)
    assert contained_in_dilated(b, b)
    assert contained_in_dilated(AlignedBox(2, (1, 0), roi), b)
    assert not contained_in_dilated(AlignedBox(2, (3, 3), roi), b)
    assert contained_in_dilated(AlignedBox(1, (0, 0), roi), AlignedBox(2, (1, 1), roi))
    assert contained_in_dilated(AlignedBox(1, (0, 0), roi), b)
    assert not contained_in_dilated(AlignedBox(1, (1, 0), roi), b)


def _random_box(rng, roi, max_depth=6):
    d = rng.randint(0, max_depth)
    return AlignedBox(d, tuple(rng.randrange(1 << d) for _ in range(roi.n)), roi)


def test_contained_in_dilated_matches_rational_geometry():
    rng = random.Random(1)
    roi = ROI.from_bounds([(-2, 2), (-2, 2)])
    for _ in range(2000):
        a, b = _random_box(rng, roi), _random_box(rng, roi)
        k = rng.choice([F(1), F(3, 2), F(2), F(3)])
        outer = sides(dilate_intervals(b.realize(), k))
        inner = sides(a.realize())
        expect = all(o[0] <= i[0] and i[1] <= o[1] for i, o in zip(inner, outer))
        assert contained_in_dilated(a, b, k) == expect


def test_partition_property():
    rng = random.Random(2)
    roi = ROI.from_bounds([(-1, 3), (0, 4), (2, 6)])
    for _ in range(50):
        b = _random_box(rng, roi)
        kids = b.subdivide()
        assert len(kids) == 8
        volume = sum(k.side.as_fraction() ** 3 for k in kids)
        assert volume == b.side.as_fraction() ** 3
        for i, x in enumerate(kids):
            assert b.contains(x)
            assert all(o[0] >= p[0] and o[1] <= p[1]
                       for o, p in zip(sides(x.realize()), sides(b.realize())))
            for y in kids[i + 1:]:
                assert not interiors_overlap(x.realize(), y.realize())


def test_alignment_dichotomy():
    rng = random.Random(3)
    for _ in range(3000):
        a, b = _random_box(rng, UNIT2), _random_box(rng, UNIT2)
        nested = a.contains(b) or b.contains(a)
        overlap = interiors_overlap(a.realize(), b.realize())
        assert nested == overlap
        assert a.interiors_disjoint(b) == (not overlap)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_annulus_tiles_3b_minus_b(n):
    roi = ROI.from_bounds([(0, 8)] * n)
    b = AlignedBox(3, (3,) * n, roi)
    cells = annulus(b)
    assert len(cells) == 3 ** n - 1
    outer = b.dilate(3)
    inner = b.realize()
    vol = sum(c[0].width().as_fraction() ** n for c in cells)
    assert vol == outer[0].width().as_fraction() ** n - inner[0].width().as_fraction() ** n
    for i, c in enumerate(cells):
        assert not interiors_overlap(c, inner)
        assert all(o.lo <= x.lo and x.hi <= o.hi for o, x in zip(outer, c))
        for d in cells[i + 1:]:
            assert not interiors_overlap(c, d)


def test_dilation_is_exact():
    rng = random.Random(4)
    roi = ROI.from_bounds([(F(-3, 8), F(29, 8))] * 2)
    for _ in range(200):
        b = _random_box(rng, roi, 20)
        for k in (F(3, 2), F(2), F(3)):
            got = sides(b.dilate(k))
            for (lo, hi), (glo, ghi) in zip(sides(b.realize()), got):
                c, h = (lo + hi) / 2, (hi - lo) / 2
                assert (glo, ghi) == (c - k * h, c + k * h)


def test_locate_and_contains_point():
    roi = ROI.from_bounds([(0, 4), (0, 4)])
    assert {b.coords for b in roi.locate((1, 1), 2)} == {(0, 0), (0, 1), (1, 0), (1, 1)}
    assert [b.coords for b in roi.locate((F(1, 2), F(7, 2)), 2)] == [(0, 3)]
    assert [b.coords for b in roi.locate((4, 4), 2)] == [(3, 3)]
    assert roi.locate((5, 1), 2) == []
    assert AlignedBox(2, (0, 3), roi).contains_point((F(1, 2), F(7, 2)))
    assert Interval(0, 1).contains(Dyadic(1))
