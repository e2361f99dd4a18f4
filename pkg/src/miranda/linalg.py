"""Interval linear algebra: determinant enclosures and certified approximate inverses."""

from __future__ import annotations

from itertools import permutations
from typing import Sequence

from .dyadic import ONE, ZERO, Dyadic, Rounding, RoundingContext
from .errors import DivisionByZeroInterval, SingularToWorkingPrecision
from .interval import Interval, _make, add, div, mul, sub

__all__ = [
    "interval_matrix_det",
    "approx_inverse_with_certificate",
    "point_matrix_norm",
    "interval_matrix_norm",
    "midpoint_matrix",
    "identity_matrix",
    "inverse_norm_bound",
    "symbolic_det_terms",
]

COFACTOR_LIMIT = 4


def identity_matrix(n: int) -> tuple[tuple[Dyadic, ...], ...]:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def midpoint_matrix(M: Sequence[Sequence[Interval]]) -> tuple[tuple[Dyadic, ...], ...]:
    return tuple(tuple(e.midpoint() for e in row) for row in M)


def point_matrix_norm(A: Sequence[Sequence[Dyadic]]) -> Dyadic:
    """Infinity norm (maximum absolute row sum), exact."""
    best = ZERO
    for row in A:
        s = ZERO
        for a in row:
            s = s + abs(a)
        if s > best:
            best = s
    return best


def interval_matrix_norm(M: Sequence[Sequence[Interval]]) -> Dyadic:
    """Upper bound on the infinity norm of every point matrix in ``M``."""
    best = ZERO
    for row in M:
        s = ZERO
        for e in row:
            s = s + e.magnitude()
        if s > best:
            best = s
    return best


# -- determinant ------------------------------------------------------------------


def _det_cofactor(M, rows: tuple[int, ...], cols: tuple[int, ...], ctx) -> Interval:
    if len(rows) == 1:
        return M[rows[0]][cols[0]]
    if len(rows) == 2:
        (r0, r1), (c0, c1) = rows, cols
        return sub(mul(M[r0][c0], M[r1][c1], ctx), mul(M[r0][c1], M[r1][c0], ctx), ctx)
    total = None
    r0, rest = rows[0], rows[1:]
    for idx, c in enumerate(cols):
        minor = _det_cofactor(M, rest, cols[:idx] + cols[idx + 1:], ctx)
        term = mul(M[r0][c], minor, ctx)
        if total is None:
            total = term
        elif idx % 2:
            total = sub(total, term, ctx)
        else:
            total = add(total, term, ctx)
    return total


def _det_gauss(M, ctx) -> Interval | None:
    """Interval elimination with partial pivoting on mignitude; None if every pivot holds 0."""
    n = len(M)
    A = [list(row) for row in M]
    det = _make(ONE, ONE)
    for k in range(n):
        piv = max(range(k, n), key=lambda r: A[r][k].mignitude())
        if A[piv][k].contains_zero():
            return None
        if piv != k:
            A[k], A[piv] = A[piv], A[k]
            det = -det
        pivot = A[k][k]
        det = mul(det, pivot, ctx)
        for r in range(k + 1, n):
            factor = div(A[r][k], pivot, ctx)
            for c in range(k + 1, n):
                A[r][c] = sub(A[r][c], mul(factor, A[k][c], ctx), ctx)
    return det


def interval_matrix_det(M: Sequence[Sequence[Interval]], ctx: RoundingContext) -> Interval:
    """Enclosure of ``det(A)`` for every point matrix ``A`` in ``M``."""
    n = len(M)
    if n == 0 or any(len(row) != n for row in M):
        raise ValueError("determinant needs a non-empty square matrix")
    idx = tuple(range(n))
    if n <= COFACTOR_LIMIT:
        return _det_cofactor(M, idx, idx, ctx)
    try:
        out = _det_gauss(M, ctx)
    except DivisionByZeroInterval:
        out = None
    if out is None:
        return _det_cofactor(M, idx, idx, ctx)
    return out


def symbolic_det_terms(n: int):
    """Signed permutations of ``range(n)``; the Leibniz expansion."""
    for perm in permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        yield (-1 if inversions % 2 else 1), perm


# -- approximate inverse ----------------------------------------------------------


def _gauss_jordan(A: Sequence[Sequence[Dyadic]], precision: int) -> list[list[Dyadic]]:
    n = len(A)
    near = Rounding.NEAREST
    aug = [list(A[i]) + [ONE if i == j else ZERO for j in range(n)] for i in range(n)]
    for k in range(n):
        piv = max(range(k, n), key=lambda r: abs(aug[r][k]))
        if aug[piv][k].is_zero():
            raise SingularToWorkingPrecision("no usable pivot")
        aug[k], aug[piv] = aug[piv], aug[k]
        pivot = aug[k][k]
        aug[k] = [x.div(pivot, precision, near) for x in aug[k]]
        for r in range(n):
            if r == k or aug[r][k].is_zero():
                continue
            f = aug[r][k]
            aug[r] = [(x - f * y).round(precision, near) for x, y in zip(aug[r], aug[k])]
    return [row[n:] for row in aug]


def _residual_norm(Minv, A) -> Dyadic:
    n = len(A)
    worst = ZERO
    for i in range(n):
        s = ZERO
        for j in range(n):
            acc = -ONE if i == j else ZERO
            for k in range(n):
                acc = acc + Minv[i][k] * A[k][j]
            s = s + abs(acc)
        if s > worst:
            worst = s
    return worst


def approx_inverse_with_certificate(
    A: Sequence[Sequence[Dyadic]], ctx: RoundingContext
) -> tuple[tuple[tuple[Dyadic, ...], ...], Dyadic]:
    """Approximate inverse and an upper bound on ``||M A - I||_inf``.

    Dyadic products are exact, so the residual is computed exactly and only
    its final value is rounded up.  Precision doubles until the residual is
    below one or the ceiling is hit.
    """
    n = len(A)
    if any(len(row) != n for row in A):
        raise ValueError("matrix must be square")
    A = [[Dyadic.coerce(a) for a in row] for row in A]
    precision = ctx.precision_bits
    while True:
        Minv = _gauss_jordan(A, precision)
        residual = _residual_norm(Minv, A).round(ctx.precision_bits, Rounding.UP)
        if residual < ONE:
            return tuple(tuple(row) for row in Minv), residual
        precision *= 2
        if precision > ctx.max_precision_bits:
            raise SingularToWorkingPrecision(
                f"residual {float(residual):.3g} >= 1 at the precision ceiling")


def inverse_norm_bound(M: Sequence[Sequence[Interval]], ctx: RoundingContext) -> Dyadic:
    """Upper bound on ``max ||A^-1||_inf`` over point matrices ``A`` in ``M``.

    Uses the midpoint inverse ``R`` and ``E = I - R M``; if ``||E|| < 1`` then
    ``||A^-1|| <= ||R|| / (1 - ||E||)``.
    """
    n = len(M)
    R, _ = approx_inverse_with_certificate(midpoint_matrix(M), ctx)
    e_norm = ZERO
    for i in range(n):
        s = ZERO
        for j in range(n):
            acc = _make(ONE, ONE) if i == j else _make(ZERO, ZERO)
            for k in range(n):
                r = R[i][k]
                acc = sub(acc, mul(_make(r, r), M[k][j], ctx), ctx)
            s = s + acc.magnitude()
        if s > e_norm:
            e_norm = s
    if e_norm >= ONE:
        raise SingularToWorkingPrecision("matrix enclosure too wide to certify the inverse")
    p = ctx.precision_bits
    denom = (ONE - e_norm).round(p, Rounding.DOWN)
    return point_matrix_norm(R).div(denom, p, Rounding.UP)
