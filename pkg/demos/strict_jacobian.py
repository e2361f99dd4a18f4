"""The symbolic determinant can settle a box the entrywise determinant cannot.

For f = ((x + y)^2 / 2, x + 2y) the Jacobian is [[x+y, x+y], [1, 2]].
Its entrywise interval determinant loses the correlation between the two
top entries, while the symbolic determinant simplifies to x + y.
"""

from __future__ import annotations

from fractions import Fraction

from miranda.dyadic import RoundingContext
from miranda.expr import FunctionSystem, parse_expression
from miranda.interval import Interval
from miranda.predicates import test_jc, test_jc_strict

CTX = RoundingContext(precision_bits=53)


def main() -> None:
    names = ["x", "y"]
    system = FunctionSystem.from_expressions(
        names, [parse_expression(s, names) for s in ("(x + y)^2 / 2", "x + 2*y")])
    box = (Interval(1, Fraction(5, 4)), Interval(1, Fraction(5, 4)))
    plain = test_jc(system, box, CTX)
    strict = test_jc_strict(system, box, CTX)
    print(f"entrywise det over 3B: {plain.details['det']}  -> success {plain.success}")
    print(f"symbolic det over 3B:  {strict.details['symbolic']}  -> success {strict.success}")


if __name__ == "__main__":
    main()
