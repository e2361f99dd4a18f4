from __future__ import annotations

import random
import zlib
from fractions import Fraction

import pytest

from _systems import GOLDEN, count_in, make_system
from miranda.boxes import AlignedBox
from miranda.dyadic import ONE, Dyadic, RoundingContext
from miranda.errors import SingularToWorkingPrecision
from miranda.interval import Interval
from miranda.predicates import (build_preconditioner, test_c0 as c0, test_jc as jc,
                                test_jc_strict as jc_strict, test_mk as mk)

CTX = RoundingContext(precision_bits=53)


def box(*sides):
    return tuple(Interval(Fraction(a), Fraction(b)) for a, b in sides)


def dilate(b, k):
    out = []
    for iv in b:
        c = (iv.lo.as_fraction() + iv.hi.as_fraction()) / 2
        h = (iv.hi.as_fraction() - iv.lo.as_fraction()) / 2 * k
        out.append(Interval(c - h, c + h))
    return tuple(out)


IDENTITY = make_system(["x", "y"], ["x", "y"])


# -- C0 -----------------------------------------------------------------------------------------


def test_c0_examples():
    s = make_system(["x", "y"], ["x - 10", "y"])
    out = c0(s, box((0, 1), (0, 1)), CTX)
    assert out.success and out.witness == 0
    assert out.details["enclosure"].hi <= Dyadic(-9) and out.details["enclosure"].lo >= Dyadic(-10)
    assert not c0(IDENTITY, box((-1, 1), (-1, 1)), CTX)
    sq = GOLDEN["sqrt2"].system
    assert c0(sq, box((0, 1)), CTX).success
    assert not c0(sq, box((1, 2)), CTX).success


def test_domain_errors_fail_conservatively():
    s = make_system(["x"], ["1/x - 3"])
    out = c0(s, box((-1, 1)), CTX)
    assert not out.success and out.flags == ("domain",)
    assert not jc(s, box((-1, 1)), CTX).success
    assert not mk(s, box((-1, 1)), CTX).success
    assert mk(s, box((Fraction(5, 16), Fraction(6, 16))), CTX).success


# -- JC and JC* --------------------------------------------------------------------------------


def test_jc_examples():
    assert jc(IDENTITY, box((-5, 7), (3, 4)), CTX).success
    assert jc_strict(IDENTITY, box((-5, 7), (3, 4)), CTX).success
    parab = GOLDEN["parab"].system
    near = box((Fraction(7, 8), Fraction(9, 8)), (Fraction(7, 8), Fraction(9, 8)))
    out = jc(parab, near, CTX)
    assert out.success and out.witness.lo.as_fraction() > 0
    # 3B = [-1/4, 5/4]^2 meets the critical curve 4xy = 1
    crossing = box((Fraction(1, 4), Fraction(3, 4)), (Fraction(1, 4), Fraction(3, 4)))
    assert not jc(parab, crossing, CTX).success


def test_strict_jacobian_can_beat_entrywise():
    # B = [1, 5/4]^2 so 3B = [3/4, 3/2]^2 and x + y ranges over [3/2, 3]
    s = make_system(["x", "y"], ["(x + y)^2 / 2", "x + 2*y"])
    b = box((1, Fraction(5, 4)), (1, Fraction(5, 4)))
    plain = jc(s, b, CTX)
    # J = [[x+y, x+y], [1, 2]]: entrywise det 2[3/2, 3] - [3/2, 3] = [0, 9/2]
    assert not plain.success and plain.witness == box((0, Fraction(9, 2)))[0]
    strict = jc_strict(s, b, CTX)
    # symbolic det = x + y = [3/2, 3]
    assert strict.success and strict.details["symbolic"] == box((Fraction(3, 2), 3))[0]


def test_jc_implies_jc_strict_on_random_boxes():
    rng = random.Random(9)
    for name in ("circle", "parab", "sin"):
        g = GOLDEN[name]
        for _ in range(150):
            d = rng.randint(1, 7)
            b = AlignedBox(d, tuple(rng.randrange(1 << d) for _ in range(2)), g.roi)
            if jc(g.system, b, CTX).success:
                assert jc_strict(g.system, b, CTX).success


# -- preconditioner and MK -------------------------------------------------------------------


def test_preconditioner_examples():
    pre = build_preconditioner(IDENTITY, (Dyadic(3), Dyadic(-1, -4)), CTX)
    assert pre.matrix == ((ONE, Dyadic(0)), (Dyadic(0), ONE))
    assert pre.residual_bound == Dyadic(0) and pre.certified_nonsingular
    s = make_system(["x", "y"], ["2*x", "4*y"])
    pre = build_preconditioner(s, (Dyadic(1), Dyadic(2)), CTX)
    assert pre.matrix == ((Dyadic(1, -1), Dyadic(0)), (Dyadic(0), Dyadic(1, -2)))
    s = make_system(["x", "y"], ["x^2 - y^2", "x - y"])
    with pytest.raises(SingularToWorkingPrecision):
        build_preconditioner(s, (Dyadic(1, -1), Dyadic(1, -1)), CTX)


def test_mk_examples():
    q = Fraction(1, 4)
    out = mk(IDENTITY, box((-q, q), (-q, q)), CTX)
    assert out.success
    assert out.details["margins"] == [Dyadic(1, -1)] * 4
    far = make_system(["x", "y"], ["x - 5", "y - 5"])
    out = mk(far, box((0, 1), (0, 1)), CTX)
    assert not out.success and out.witness == (0, 1)
    sq = GOLDEN["sqrt2"].system
    assert mk(sq, box((Fraction(11, 8), Fraction(23, 16))), CTX).success


def test_mk_singular_anchor_is_flagged():
    s = make_system(["x", "y"], ["x^2 - y^2", "x - y"])
    out = mk(s, box((0, 1), (0, 1)), CTX)
    assert not out.success and out.flags == ("singular",)


def test_mk_scale_factor_dilates_before_testing():
    sq = GOLDEN["sqrt2"].system
    b = box((Fraction(11, 8), Fraction(23, 16)))
    scaled = mk(sq, b, CTX, scale_factor=Fraction(3, 2))
    direct = mk(sq, dilate(b, Fraction(3, 2)), CTX)
    assert scaled.success == direct.success
    assert scaled.details["margins"] == direct.details["margins"]


# -- soundness and precision -------------------------------------------------------------------


@pytest.mark.parametrize("name", ["sqrt2", "circle", "parab", "sin", "far"])
def test_success_claims_hold(name):
    g = GOLDEN[name]
    rng = random.Random(zlib.crc32(name.encode()))
    for _ in range(120):
        d = rng.randint(0, 8)
        b = AlignedBox(d, tuple(rng.randrange(1 << d) for _ in range(g.system.n)), g.roi)
        if c0(g.system, b, CTX).success:
            assert count_in(g.roots, b.realize()) == 0
        if mk(g.system, b, CTX).success:
            assert count_in(g.roots, b.dilate(2)) >= 1
        if jc(g.system, b, CTX).success:
            assert count_in(g.roots, b.dilate(3)) <= 1


def test_success_is_monotone_in_precision():
    g = GOLDEN["sin"]
    rng = random.Random(4)
    for _ in range(60):
        d = rng.randint(2, 7)
        b = AlignedBox(d, tuple(rng.randrange(1 << d) for _ in range(2)), g.roi)
        for test in (c0, jc, mk):
            if test(g.system, b, RoundingContext(precision_bits=24)).success:
                assert test(g.system, b, RoundingContext(precision_bits=200)).success


def test_precision_ceiling_is_a_flagged_failure():
    g = GOLDEN["sin"]
    ctx = RoundingContext(precision_bits=8, max_precision_bits=8)
    b = AlignedBox(20, (1 << 19, 1 << 19), g.roi)
    outs = [c0(g.system, b, ctx), jc(g.system, b, ctx), mk(g.system, b, ctx)]
    assert all(not o.success for o in outs)
    assert any("precision" in o.flags for o in outs)
