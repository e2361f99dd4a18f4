"""Effective box predicates: exclusion (C0), Jacobian (JC, JC*) and Miranda (MK).

All predicates are one-sided.  Success is a certificate; failure, including
failure caused by a domain error or an uncertifiable preconditioner, claims
nothing.  Every box form is a mean value form evaluated in outward dyadic
interval arithmetic.  When ``ctx.check_accuracy`` is set, each effective
enclosure is compared with one computed at four times the precision and the
working precision is doubled until they agree to the required tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .boxes import AlignedBox, dilate_intervals, faces_of_box
from .dyadic import ONE, ZERO, Dyadic, Rounding, RoundingContext
from .errors import DomainError, PrecisionCeilingExceeded, SingularToWorkingPrecision
from .expr import (FunctionSystem, eval_mean_value_many, eval_point_certified_many,
                   evaluate_many)
from .interval import Interval, _make, add, hausdorff, mul, scale
from .linalg import approx_inverse_with_certificate, interval_matrix_det, midpoint_matrix

__all__ = [
    "PredicateOutcome",
    "Preconditioner",
    "test_c0",
    "test_jc",
    "test_jc_strict",
    "test_mk",
    "build_preconditioner",
    "working_context",
]

# Tolerances on the distance between an effective enclosure and its
# high-precision reference, in units of the box width.
C0_TOL = (1, -4)      # w/16
JC_TOL = (3, -4)      # 3w/16
MK_TOL = (1, -4)      # w/16


@dataclass(frozen=True)
class PredicateOutcome:
    """Verdict of one box test.

    ``witness`` names what decided it: the excluding component for C0, the
    determinant enclosure for JC, the first failing face for MK.
    """

    success: bool
    test: str
    witness: object = None
    evaluations: int = 0
    flags: tuple[str, ...] = ()
    details: dict = field(default_factory=dict, compare=False, repr=False)

    def __bool__(self) -> bool:
        return self.success


@dataclass(frozen=True)
class Preconditioner:
    """Approximate inverse Jacobian at the anchor ``m``."""

    anchor: tuple[Dyadic, ...]
    matrix: tuple[tuple[Dyadic, ...], ...]
    residual_bound: Dyadic

    @property
    def certified_nonsingular(self) -> bool:
        return self.residual_bound < ONE


# -- plumbing ---------------------------------------------------------------------------


def _as_box(box) -> tuple[tuple[Interval, ...], Dyadic]:
    if isinstance(box, AlignedBox):
        ivs = box.realize()
        return ivs, box.side
    ivs = tuple(box)
    return ivs, max(iv.hi - iv.lo for iv in ivs)


def working_context(ctx: RoundingContext, width: Dyadic) -> RoundingContext:
    """Base precision plus ``log2(1/w)`` bits so absolute tolerances scale with the box."""
    if width.mantissa == 0:
        return ctx
    extra = max(0, -width.magnitude_exponent())
    if extra == 0:
        return ctx
    return ctx.with_precision(min(ctx.precision_bits + extra, ctx.max_precision_bits))


def _accurate(compute: Callable[[RoundingContext], list], tol: Dyadic,
              ctx: RoundingContext) -> tuple[list, RoundingContext]:
    """Run ``compute`` at increasing precision until it is within ``tol`` of a 4x reference.

    Returns the working-precision result (not the reference) and the context used.
    """
    if not ctx.check_accuracy:
        return compute(ctx), ctx
    work = ctx
    while True:
        result = compute(work)
        ref_bits = 4 * work.precision_bits
        reference = compute(work.with_precision(ref_bits))
        if all(hausdorff(_first(a), _first(b)) <= tol for a, b in zip(result, reference)):
            return result, work
        nxt = 2 * work.precision_bits
        if nxt > ctx.max_precision_bits:
            raise PrecisionCeilingExceeded("accuracy requirement not met below the ceiling")
        work = work.with_precision(nxt)


def _first(x):
    return x if isinstance(x, Interval) else x[0]


def _tol(width: Dyadic, factor: tuple[int, int]) -> Dyadic:
    return Dyadic(*factor) * width


def _failure(test: str, flag: str, exc: Exception, evaluations: int = 0) -> PredicateOutcome:
    return PredicateOutcome(False, test, None, evaluations, (flag,), {"error": str(exc)})


# -- C0 ------------------------------------------------------------------------------------


def test_c0(system: FunctionSystem, box, ctx: RoundingContext) -> PredicateOutcome:
    """Exclusion: succeeds iff some mean value enclosure ``f_i(B)`` misses 0."""
    ivs, w = _as_box(box)
    work = working_context(ctx, w)
    tol = _tol(w, C0_TOL)
    evaluations = 0
    memo_by_bits: dict = {}
    enclosures, bits = [], []
    try:
        for i, f in enumerate(system.components):
            def compute(c, f=f):
                memo = memo_by_bits.setdefault(c.precision_bits, {})
                return eval_mean_value_many((f,), ivs, c, memo=memo)
            (val,), used = _accurate(compute, tol, work)
            evaluations += 1
            enclosures.append(val)
            bits.append(used.precision_bits)
            if not val.contains_zero():
                return PredicateOutcome(True, "C0", i, evaluations, (),
                                        {"enclosure": val, "enclosures": enclosures,
                                         "precision_bits": bits})
    except DomainError as exc:
        return _failure("C0", "domain", exc, evaluations)
    except PrecisionCeilingExceeded as exc:
        return _failure("C0", "precision", exc, evaluations)
    return PredicateOutcome(False, "C0", None, evaluations, (),
                            {"enclosures": enclosures, "precision_bits": bits})


# -- JC and JC* -----------------------------------------------------------------------------


def jacobian_enclosure(system: FunctionSystem, region: Sequence[Interval], ctx: RoundingContext,
                       tol: Dyadic | None = None, *, with_context: bool = False):
    """Mean value enclosures of every ``df_i/dx_j`` over ``region``.

    With ``with_context`` the context that met the accuracy check is returned too.
    """
    n = system.n
    flat = [system.first_partials[i][j] for i in range(n) for j in range(n)]
    memo_by_bits: dict = {}

    def compute(c):
        memo = memo_by_bits.setdefault(c.precision_bits, {})
        return eval_mean_value_many(flat, region, c, memo=memo)

    if tol is None:
        vals, used = compute(ctx), ctx
    else:
        vals, used = _accurate(compute, tol, ctx)
    J = tuple(tuple(vals[i * n:(i + 1) * n]) for i in range(n))
    return (J, used) if with_context else J


def _jc_det(system, box, ctx):
    ivs, w = _as_box(box)
    region = dilate_intervals(ivs, 3)
    work = working_context(ctx, w)
    J, used = jacobian_enclosure(system, region, work, _tol(w, JC_TOL), with_context=True)
    return interval_matrix_det(J, work), region, w, work, J, used


def test_jc(system: FunctionSystem, box, ctx: RoundingContext) -> PredicateOutcome:
    """Jacobian test: the interval determinant of ``J(3B)`` excludes 0."""
    n = system.n
    try:
        det, _, _, _, J, used = _jc_det(system, box, ctx)
    except DomainError as exc:
        return _failure("JC", "domain", exc)
    except PrecisionCeilingExceeded as exc:
        return _failure("JC", "precision", exc)
    return PredicateOutcome(not det.contains_zero(), "JC", det, n * n, (),
                            {"det": det, "jacobian": J, "precision_bits": used.precision_bits})


def test_jc_strict(system: FunctionSystem, box, ctx: RoundingContext) -> PredicateOutcome:
    """Strict Jacobian test on the symbolic determinant over ``3B``.

    The mean value enclosure of ``det J_f`` is intersected with the entrywise
    determinant enclosure; both contain the true range, and the intersection
    makes success of JC imply success here.
    """
    n = system.n
    try:
        det, region, w, work, _, _ = _jc_det(system, box, ctx)
        expr = system.jacobian_det
        memo_by_bits: dict = {}

        def compute(c):
            memo = memo_by_bits.setdefault(c.precision_bits, {})
            return eval_mean_value_many((expr,), region, c, memo=memo)

        (sym,), _ = _accurate(compute, _tol(w, JC_TOL), work)
    except DomainError as exc:
        return _failure("JC*", "domain", exc)
    except PrecisionCeilingExceeded as exc:
        return _failure("JC*", "precision", exc)
    both = sym.intersect(det)
    if both is None:  # pragma: no cover - two enclosures of one range always meet
        raise AssertionError(f"disjoint determinant enclosures {sym} and {det}")
    return PredicateOutcome(not both.contains_zero(), "JC*", both, n * n + 1, (),
                            {"det": both, "symbolic": sym, "entrywise": det})


# -- MK ----------------------------------------------------------------------------------------


def build_preconditioner(system: FunctionSystem, anchor: Sequence[Dyadic],
                         ctx: RoundingContext) -> Preconditioner:
    """``M ≈ J^-1(m)`` from the midpoint of a tight enclosure of ``J(m)``."""
    n = system.n
    flat = [system.first_partials[i][j] for i in range(n) for j in range(n)]
    tol = Dyadic(1, -ctx.precision_bits)
    vals = eval_point_certified_many(flat, anchor, tol, ctx)
    J = tuple(tuple(vals[i * n:(i + 1) * n]) for i in range(n))
    M, residual = approx_inverse_with_certificate(midpoint_matrix(J), ctx)
    # M A ≈ I was certified for the midpoint A; recheck against the enclosure itself
    e_norm = ZERO
    for i in range(n):
        s = ZERO
        for j in range(n):
            acc = _make(ONE, ONE) if i == j else _make(ZERO, ZERO)
            for k in range(n):
                acc = add(acc, scale(J[k][j], -M[i][k]))
            s = s + acc.magnitude()
        e_norm = s if s > e_norm else e_norm
    bound = e_norm.round(ctx.precision_bits, Rounding.UP)
    if bound >= ONE:
        raise SingularToWorkingPrecision("preconditioner residual is not below 1")
    return Preconditioner(tuple(anchor), M, bound)


def _face_enclosures(system, M, face_box, i, tol, ctx, memo) -> Interval:
    """Mean value enclosure of ``g_i = sum_j M_ij f_j`` on one face, expanded at its center."""
    n = system.n
    center = tuple(iv.midpoint() for iv in face_box)
    row = M[i]
    norm = ZERO
    for a in row:
        norm = norm + abs(a)
    shift = max(0, norm.magnitude_exponent() + 1) if norm.mantissa else 0
    fvals = eval_point_certified_many(system.components, center, tol.ldexp(-2 - shift), ctx)
    acc = _make(ZERO, ZERO)
    for j in range(n):
        if row[j].mantissa:
            acc = add(acc, scale(fvals[j], row[j], ctx), ctx)
    for k in range(n):
        iv = face_box[k]
        if iv.lo == iv.hi:
            continue
        partials = evaluate_many([system.first_partials[j][k] for j in range(n)],
                                 face_box, ctx, memo)
        grad = _make(ZERO, ZERO)
        for j in range(n):
            if row[j].mantissa:
                grad = add(grad, scale(partials[j], row[j], ctx), ctx)
        off = _make(iv.lo - center[k], iv.hi - center[k])
        acc = add(acc, mul(grad, off, ctx), ctx)
    return acc


def test_mk(system: FunctionSystem, box, ctx: RoundingContext, *, scale_factor=1,
            preconditioner: Preconditioner | None = None) -> PredicateOutcome:
    """Miranda test on ``2·(scale_factor·B)`` for the preconditioned system.

    Face ``i+`` must have ``g_i > 0`` and face ``i-`` must have ``g_i < 0``.
    Evaluation stops at the first face that fails.
    """
    ivs, w = _as_box(box)
    if scale_factor != 1:
        ivs = dilate_intervals(ivs, scale_factor)
        w = max(iv.hi - iv.lo for iv in ivs)
    work = working_context(ctx, w)
    tol = _tol(w, MK_TOL)
    try:
        pre = preconditioner or build_preconditioner(
            system, tuple(iv.midpoint() for iv in ivs), work)
    except SingularToWorkingPrecision as exc:
        return _failure("MK", "singular", exc)
    except DomainError as exc:
        return _failure("MK", "domain", exc)
    except PrecisionCeilingExceeded as exc:
        return _failure("MK", "precision", exc)
    outer = dilate_intervals(ivs, 2)
    margins, faces = [], []
    evaluations = 0
    for face in faces_of_box(outer):
        face_box = face.realize()
        memo_by_bits: dict = {}

        def compute(c, face_box=face_box, i=face.axis):
            memo = memo_by_bits.setdefault(c.precision_bits, {})
            return [_face_enclosures(system, pre.matrix, face_box, i, tol, c, memo)]

        try:
            (val,), used = _accurate(compute, tol, work)
        except DomainError as exc:
            return _failure("MK", "domain", exc, evaluations)
        except PrecisionCeilingExceeded as exc:
            return _failure("MK", "precision", exc, evaluations)
        evaluations += 1
        faces.append((face, val, used.precision_bits))
        margin = val.lo if face.side > 0 else -val.hi
        if margin.mantissa <= 0:
            return PredicateOutcome(False, "MK", (face.axis, face.side), evaluations, (),
                                    {"enclosure": val, "margins": margins, "faces": faces,
                                     "preconditioner": pre})
        margins.append(margin)
    return PredicateOutcome(True, "MK", None, evaluations, (),
                            {"margins": margins, "min_margin": min(margins),
                             "residual_bound": pre.residual_bound, "faces": faces,
                             "preconditioner": pre})
