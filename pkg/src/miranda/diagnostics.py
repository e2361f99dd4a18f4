"""Sure-success radii and theory checks for systems with known roots.

The certified radii are lower bounds: a box of width at most the radius that
contains the root is guaranteed to pass the corresponding test.  Discs
around a root are always replaced by their bounding boxes, which only makes
the norms larger and the radii smaller.  The exclusion margins at the end
are sampled estimates and carry no certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .boxes import ROI, AlignedBox, as_fraction, dilate_intervals, faces_of_box
from .dyadic import ONE, ZERO, Dyadic, Rounding, RoundingContext
from .errors import (DomainError, PrecisionCeilingExceeded, SingularEnclosure,
                     SingularToWorkingPrecision)
from .expr import (FunctionSystem, eval_point_certified_many, evaluate_many, k_matrix,
                   lipschitz_bound)
from .interval import Interval, _make, add, scale
from .linalg import interval_matrix_det, inverse_norm_bound, point_matrix_norm
from .predicates import build_preconditioner, test_jc, test_mk

__all__ = [
    "RootEnclosure",
    "SureSuccessReport",
    "enclose_root",
    "certify_lambda1",
    "lambda_hat1",
    "certify_lambda2",
    "certify_lambda3",
    "certify_lambda4",
    "lambda3_from_bounds",
    "estimate_exclusion_margin",
    "sure_success_check",
    "depth_bound",
]

BISECTION_STEPS = 40


@dataclass(frozen=True)
class RootEnclosure:
    """A small box holding exactly one simple root, and a close approximation of it."""

    box: tuple[Interval, ...]
    witness: tuple[Dyadic, ...]
    exact: bool = False

    @property
    def n(self) -> int:
        return len(self.box)

    def widen(self, r: Dyadic) -> tuple[Interval, ...]:
        """Bounding box of the disc of radius ``r`` around any point of the enclosure."""
        return tuple(_make(iv.lo - r, iv.hi + r) for iv in self.box)


@dataclass(frozen=True)
class Radius:
    """A certified radius; ``capped`` means no finite bound applies and ``value`` is the cap."""

    value: Dyadic
    capped: bool = False

    def __float__(self) -> float:
        return float(self.value)


def _min_radius(a: Radius, b: Radius) -> Radius:
    if a.value < b.value:
        return a
    if b.value < a.value:
        return b
    return Radius(a.value, a.capped and b.capped)


# -- root enclosures --------------------------------------------------------------------


def _float_jacobian(system: FunctionSystem):
    n = system.n
    flat = [system.first_partials[i][j] for i in range(n) for j in range(n)]
    fj = system.numpy_function(flat)
    return lambda p: np.array(fj(*p), dtype=float).reshape(n, n)


def enclose_root(system: FunctionSystem, hint: Sequence, ctx: RoundingContext,
                 newton_steps: int = 60) -> RootEnclosure:
    """Refine ``hint`` by Newton's method, then certify a tiny box with JC and MK.

    The enclosure is ``2B`` for the certified hypercube ``B``: MK puts a root
    there and JC makes it the only root of ``3B``.
    """
    f = system.numpy_function()
    jac = _float_jacobian(system)
    p = np.array([float(as_fraction(h)) for h in hint], dtype=float)
    with np.errstate(all="ignore"):
        for _ in range(newton_steps):
            J = jac(p)
            if not np.all(np.isfinite(J)) or abs(np.linalg.det(J)) < 1e-300:
                raise SingularEnclosure(f"Jacobian is singular near {p.tolist()}")
            try:
                step = np.linalg.solve(J, np.array(f(*p), dtype=float))
            except np.linalg.LinAlgError:
                raise SingularEnclosure(f"Jacobian is singular near {p.tolist()}") from None
            p = p - step
            if not np.all(np.isfinite(p)):
                raise SingularEnclosure("Newton iteration diverged")
            if np.max(np.abs(step)) <= 1e-15 * max(1.0, float(np.max(np.abs(p)))):
                break
    center = tuple(Dyadic.coerce(float(x)) for x in p)
    exact = False
    for bits in range(0, 53, 4):
        snapped = tuple(Dyadic.coerce(round(float(x) * 2.0 ** bits)).ldexp(-bits) for x in p)
        try:
            vals = eval_point_certified_many(system.components, snapped, ZERO, ctx)
        except (DomainError, PrecisionCeilingExceeded):
            continue
        if all(v.lo.mantissa == 0 and v.hi.mantissa == 0 for v in vals):
            center, exact = snapped, True
            break
    for k in range(24, 44, 4):
        half = Dyadic(1, -k - 1) * Dyadic.coerce(max(1.0, float(np.max(np.abs(p)))))
        box = tuple(_make(c - half, c + half) for c in center)
        if test_jc(system, box, ctx).success and test_mk(system, box, ctx).success:
            return RootEnclosure(dilate_intervals(box, 2), center, exact)
    raise SingularEnclosure(f"could not certify a simple root near {p.tolist()}")


# -- norms over regions -------------------------------------------------------------------


def _jacobian_natural(system, region, ctx):
    n = system.n
    flat = [system.first_partials[i][j] for i in range(n) for j in range(n)]
    vals = evaluate_many(flat, region, ctx)
    return tuple(tuple(vals[i * n:(i + 1) * n]) for i in range(n))


def inverse_jacobian_norm(system: FunctionSystem, region, ctx: RoundingContext) -> Dyadic:
    """Upper bound on ``||J^-1(x)||_inf`` over ``region``."""
    try:
        return inverse_norm_bound(_jacobian_natural(system, region, ctx), ctx)
    except (SingularToWorkingPrecision, DomainError) as exc:
        raise SingularEnclosure(str(exc)) from exc


def _sqrt_up(n: int, p: int) -> Dyadic:
    return Dyadic(n).sqrt(p, Rounding.UP)


def _bisect(ok, cap: Dyadic, steps: int = BISECTION_STEPS) -> Radius:
    """Largest dyadic ``r`` in ``(0, cap]`` found by bisection with ``ok(r)`` true."""
    if ok(cap):
        return Radius(cap, True)
    lo, hi = ZERO, cap
    for _ in range(steps):
        mid = (lo + hi).half()
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return Radius(lo)


# -- lambda_1, hat lambda_1, lambda_2 --------------------------------------------------------


def _n_of_r(system, root, r, ctx) -> Dyadic | None:
    """``||J^-1(D)|| * ||K(D)||`` with ``D`` the box around the disc of radius ``2 sqrt(n) r``."""
    n = system.n
    radius = (_sqrt_up(n, ctx.precision_bits) * r).ldexp(1)
    region = root.widen(radius)
    K = k_matrix(system, region, ctx)
    k_norm = point_matrix_norm(K)
    if k_norm.mantissa == 0:
        return ZERO
    return inverse_jacobian_norm(system, region, ctx) * k_norm


def certify_lambda1(system: FunctionSystem, root: RootEnclosure, ctx: RoundingContext,
                    cap: Dyadic) -> Radius:
    """Lower bound on the radius where ``27 n ||J^-1 K|| r <= 1`` still holds."""
    n = system.n
    tiny = cap.ldexp(-BISECTION_STEPS)
    _n_of_r(system, root, tiny, ctx)  # raises SingularEnclosure for a bad root

    def ok(r):
        try:
            N = _n_of_r(system, root, r, ctx)
        except SingularEnclosure:
            return False
        return Dyadic(27 * n) * N * r <= ONE

    return _bisect(ok, cap)


def _delta_region(system, root, lam1: Radius, ctx):
    radius = (_sqrt_up(system.n, ctx.precision_bits) * lam1.value).ldexp(1)
    return root.widen(radius)


def lambda_hat1(system: FunctionSystem, root: RootEnclosure, ctx: RoundingContext,
                cap: Dyadic, lam1: Radius | None = None) -> Radius:
    """``1 / (64 n^2 L ||J^-1(D)||)`` with ``L`` the largest Lipschitz bound of the partials on ``D``."""
    n = system.n
    lam1 = lam1 or certify_lambda1(system, root, ctx, cap)
    region = _delta_region(system, root, lam1, ctx)
    L = ZERO
    for row in system.first_partials:
        for e in row:
            b = lipschitz_bound(e, region, ctx)
            L = b if b > L else L
    if L.mantissa == 0:
        return Radius(cap, True)
    inv = inverse_jacobian_norm(system, region, ctx)
    value = ONE.div(Dyadic(64 * n * n) * L * inv, ctx.precision_bits, Rounding.DOWN)
    if value >= cap:
        return Radius(cap, True)
    return Radius(value)


def certify_lambda2(system: FunctionSystem, root: RootEnclosure, ctx: RoundingContext,
                    cap: Dyadic) -> tuple[Radius, Radius, Radius]:
    """``(lambda_1, hat lambda_1, min of the two)``."""
    lam1 = certify_lambda1(system, root, ctx, cap)
    hat = lambda_hat1(system, root, ctx, cap, lam1)
    return lam1, hat, _min_radius(lam1, hat)


# -- lambda_3, lambda_4 -------------------------------------------------------------------------


def _jc_polynomial_positive(det_lo: Dyadic, U: Dyadic, V: Dyadic, n: int, x: Dyadic) -> bool:
    """``|det J(alpha)| - 3n n! V (U + 3Vx)^(n-1) x > 0``, decided exactly."""
    return det_lo - Dyadic(3 * n * math.factorial(n)) * V * (U + Dyadic(3) * V * x) ** (n - 1) * x \
        > ZERO


def lambda3_from_bounds(det_lo: Dyadic, U: Dyadic, V: Dyadic, n: int, cap: Dyadic) -> Radius:
    """Smallest positive root of the Jacobian-test polynomial, from below, for fixed bounds."""
    if det_lo <= ZERO:
        raise SingularEnclosure("determinant bound does not exclude 0")
    return _bisect(lambda x: _jc_polynomial_positive(det_lo, U, V, n, x), cap)


def _root_bounds(system, root, ctx) -> tuple[Dyadic, Dyadic]:
    """Lower bound on ``|det J(alpha)|`` and upper bound on ``max |J_ij(alpha)|``."""
    J = _jacobian_natural(system, root.box, ctx)
    det = interval_matrix_det(J, ctx)
    if det.contains_zero():
        raise SingularEnclosure("Jacobian determinant at the root is not bounded away from 0")
    U = max(e.magnitude() for row in J for e in row)
    return det.mignitude(), U


def certify_lambda3(system: FunctionSystem, root: RootEnclosure, ctx: RoundingContext,
                    cap: Dyadic) -> Radius:
    """Lower bound on the Jacobian-test radius, with ``V`` taken over the region of each trial width.

    A box of width ``x`` containing the root has ``3B`` inside the root box
    widened by ``2x``; ``V`` is the largest curvature bound there.
    """
    det_lo, U = _root_bounds(system, root, ctx)
    n = system.n

    def ok(x):
        try:
            K = k_matrix(system, root.widen(x.ldexp(1)), ctx)
        except DomainError:
            return False
        V = max(e for row in K for e in row)
        return _jc_polynomial_positive(det_lo, U, V, n, x)

    return _bisect(ok, cap)


def global_lipschitz(system: FunctionSystem, roi: ROI, ctx: RoundingContext) -> Dyadic:
    """Lipschitz bound for every component and first partial on ``3B0``."""
    region = roi.dilated(3)
    best = ZERO
    for e in list(system.components) + [p for row in system.first_partials for p in row]:
        b = lipschitz_bound(e, region, ctx)
        best = b if b > best else best
    return best


# Slack on the effective Jacobian entries: the accuracy allowance of 3w/16 per
# side widens each entry by at most 3w/8 = 3 * (1/8) * w.
EFFECTIVE_SLACK = Dyadic(1, -3)


def certify_lambda4(system: FunctionSystem, root: RootEnclosure, roi: ROI,
                    ctx: RoundingContext, cap: Dyadic) -> Radius:
    """As lambda_3 but with the global Lipschitz constant (plus effective slack) for ``V``."""
    det_lo, U = _root_bounds(system, root, ctx)
    L = global_lipschitz(system, roi, ctx) + EFFECTIVE_SLACK
    return lambda3_from_bounds(det_lo, U, L, system.n, cap)


# -- exclusion margins (sampled, not certified) ------------------------------------------------


def _directions(n: int) -> np.ndarray:
    dirs = []
    for i in range(n):
        for s in (1.0, -1.0):
            d = np.zeros(n)
            d[i] = s
            dirs.append(d)
    for signs in np.array(np.meshgrid(*[[1.0, -1.0]] * n)).T.reshape(-1, n):
        if n > 1:
            dirs.append(signs / math.sqrt(n))
    return np.array(dirs)


def _zero_set_distance(fi, points: np.ndarray, reach: float, steps: int) -> np.ndarray:
    """Ray-marched distance from each point to the zero set of ``fi`` (upper estimate)."""
    n = points.shape[1]
    best = np.full(points.shape[0], reach)
    base = np.asarray(fi(*points.T), dtype=float)
    ts = np.linspace(0.0, reach, steps + 1)[1:]
    for d in _directions(n):
        prev_t = np.zeros(points.shape[0])
        prev_v = base
        open_ = np.ones(points.shape[0], dtype=bool)
        for t in ts:
            q = points + t * d
            v = np.asarray(fi(*q.T), dtype=float)
            hit = open_ & ((np.sign(v) != np.sign(prev_v)) | (v == 0))
            if np.any(hit):
                lo, hi = prev_t[hit].copy(), np.full(hit.sum(), t)
                pts, v_lo = points[hit], prev_v[hit]
                for _ in range(30):
                    mid = (lo + hi) / 2
                    vm = np.asarray(fi(*(pts + mid[:, None] * d).T), dtype=float)
                    same = np.sign(vm) == np.sign(v_lo)
                    lo = np.where(same, mid, lo)
                    hi = np.where(same, hi, mid)
                best[hit] = np.minimum(best[hit], hi)
                open_ &= ~hit
            prev_t = np.full(points.shape[0], t)
            prev_v = v
            if not np.any(open_):
                break
    best[base == 0] = 0.0
    return best


def estimate_exclusion_margin(system: FunctionSystem, roi: ROI, roots: Sequence[Sequence],
                              samples: int = 1024, ell1: float = 0.0,
                              lipschitz: float | None = None, steps: int = 256,
                              ctx: RoundingContext | None = None) -> dict:
    """Sampled estimates of ``d0``, ``lambda_C0 = d0/(2 sqrt n)``, ``u`` and ``u/2``.

    NOT CERTIFIED.  Sample points are the corners of ``2B0`` followed by an
    unscrambled Halton sequence, so a larger sample is a superset of a
    smaller one and the infimum estimate can only decrease.
    """
    n = system.n
    outer = roi.dilated(2)
    lo = np.array([float(iv.lo) for iv in outer])
    hi = np.array([float(iv.hi) for iv in outer])
    corners = np.array([[hi[i] if (m >> i) & 1 else lo[i] for i in range(n)]
                        for m in range(1 << n)])
    k = max(0, samples - len(corners))
    halton = qmc.Halton(d=n, scramble=False).random(k + 1)[1:] if k else np.empty((0, n))
    pts = np.vstack([corners, lo + halton * (hi - lo)])[:max(samples, 1)]
    if roots and ell1 > 0:
        keep = np.ones(len(pts), dtype=bool)
        for r in roots:
            keep &= np.linalg.norm(pts - np.array([float(as_fraction(x)) for x in r]), axis=1) >= ell1
        pts = pts[keep]
    reach = 8.0 * float(roi.width)
    comps = [system.numpy_function([c]) for c in system.components]
    if len(pts) == 0:
        return {"samples": 0, "d0": reach, "lambda_c0": reach / (2 * math.sqrt(n)),
                "u": math.inf, "lambda_box_c0": math.inf, "certified": False}
    with np.errstate(all="ignore"):
        seps = np.array([_zero_set_distance(lambda *a, f=f: f(*a)[0], pts, reach, steps)
                         for f in comps])
        vals = np.array([np.abs(np.asarray(f(*pts.T)[0], dtype=float)) for f in comps])
    d0 = float(np.min(np.max(seps, axis=0)))
    if lipschitz is None:
        lipschitz = float(global_lipschitz(system, roi, ctx or RoundingContext()))
    u = float(np.min(np.max(vals, axis=0))) / lipschitz if lipschitz > 0 else math.inf
    return {"samples": int(len(pts)), "d0": d0, "lambda_c0": d0 / (2 * math.sqrt(n)),
            "u": u, "lambda_box_c0": u / 2, "certified": False}


def depth_bound(roi_width: float, radii: Sequence[float]) -> int:
    """``ceil(log2(4 w(B0) / min radii))``: the deepest level a box can reach."""
    m = min(radii)
    if m <= 0:
        raise ValueError("radii must be positive")
    return max(0, math.ceil(math.log2(4 * roi_width / m)))


# -- sure success -----------------------------------------------------------------------------


@dataclass
class TrialRecord:
    test: str
    depth: int
    width: float
    boxes: int
    successes: int
    required: bool

    @property
    def passed(self) -> bool:
        return not self.required or self.successes == self.boxes


@dataclass
class SureSuccessReport:
    """Certified radii for one root and the outcome of the trials they imply."""

    witness: tuple[float, ...]
    radii: dict
    trials: list = field(default_factory=list)
    side_condition: list = field(default_factory=list)
    widest_success: dict = field(default_factory=dict)
    conservative: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return (all(t.passed for t in self.trials)
                and all(ok for _, ok in self.side_condition)
                and all(self.conservative.values()))


def boxes_containing(roi: ROI, root: RootEnclosure, depth: int) -> list[AlignedBox]:
    """Aligned boxes at ``depth`` that surely contain the root.

    An exact root is located directly; otherwise a box must contain the whole
    enclosure, and boxes cutting through it are skipped as undecidable.
    """
    if root.exact:
        return roi.locate(root.witness, depth)
    out = []
    for b in roi.locate(root.witness, depth):
        real = b.realize()
        if all(r.lo <= iv.lo and iv.hi <= r.hi for r, iv in zip(real, root.box)):
            out.append(b)
    return out


def depth_for_width(roi: ROI, width: Dyadic) -> int:
    """Smallest depth whose aligned width is at most ``width``."""
    d = 0
    while roi.width.ldexp(-d) > width:
        d += 1
    return d


def side_condition_holds(system: FunctionSystem, box: AlignedBox, ctx: RoundingContext) -> bool:
    """Whether every ``w(d g_i / d x_j (2B_i^+)) <= 1/(32 n)`` with ``g`` preconditioned at the center."""
    n = system.n
    pre = build_preconditioner(system, box.center(), ctx)
    limit = Fraction(1, 32 * n)
    for face in faces_of_box(box.dilate(2)):
        if face.side < 0:
            continue
        i = face.axis
        fb = face.realize()
        for j in range(n):
            partials = evaluate_many([system.first_partials[k][j] for k in range(n)], fb, ctx)
            acc = _make(ZERO, ZERO)
            for k in range(n):
                acc = add(acc, scale(partials[k], pre.matrix[i][k], ctx), ctx)
            if (acc.hi - acc.lo).as_fraction() > limit:
                return False
    return True


def sure_success_check(system: FunctionSystem, roi: ROI, root: RootEnclosure,
                       ctx: RoundingContext, extra_depths: int = 2,
                       coarse_depths: int = 3) -> SureSuccessReport:
    """Certify the radii for ``root`` and run MK and JC on every aligned box that should pass.

    For each radius the trials cover the first aligned depth at or below the
    radius and ``extra_depths`` finer ones (required to pass), plus up to
    ``coarse_depths`` coarser ones recorded as efficacy data only.
    """
    cap = roi.width
    lam1, hat, lam2 = certify_lambda2(system, root, ctx, cap)
    lam3 = certify_lambda3(system, root, ctx, cap)
    lam4 = certify_lambda4(system, root, roi, ctx, cap)
    radii = {"lambda1": lam1, "lambda_hat1": hat, "lambda2": lam2, "lambda3": lam3,
             "lambda4": lam4}
    report = SureSuccessReport(tuple(float(x) for x in root.witness), radii)

    def run(test_name, radius: Radius, strict: bool):
        d0 = depth_for_width(roi, radius.value)
        if strict and roi.width.ldexp(-d0) == radius.value and not radius.capped:
            d0 += 1  # the Jacobian radius only holds for widths strictly below it
        failures = []
        for d in range(max(0, d0 - coarse_depths), d0 + extra_depths + 1):
            boxes = boxes_containing(roi, root, d)
            if test_name == "MK":
                ok = [test_mk(system, b, ctx).success for b in boxes]
            else:
                ok = [test_jc(system, b, ctx).success for b in boxes]
            width = float(roi.width.ldexp(-d))
            rec = TrialRecord(test_name, d, width, len(boxes), sum(ok), d >= d0)
            report.trials.append(rec)
            if rec.successes < rec.boxes:
                failures.append(width)
            if test_name == "MK" and d >= d0:
                for b, good in zip(boxes, ok):
                    if roi.width.ldexp(-d) <= lam1.value and side_condition_holds(system, b, ctx):
                        report.side_condition.append(((d, b.coords), good))
        tested = sorted({t.width for t in report.trials if t.test == test_name})
        widest = 0.0
        for w in tested:
            if any(fw <= w for fw in failures):
                break
            widest = w
        report.widest_success[test_name] = widest
        report.conservative[test_name] = all(float(radius.value) < fw for fw in failures)

    run("MK", lam2, strict=False)
    run("JC", lam3, strict=True)
    return report
