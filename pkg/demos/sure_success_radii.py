"""Certified radii below which the box tests cannot fail, checked against the tests.

For each root of x^2 - 2 and of the circle-line system we certify the
radii, then run the Miranda and Jacobian tests on every aligned box that
holds the root at those widths.
"""

from __future__ import annotations

from pathlib import Path

from miranda.problem import parse_problem
from miranda.diagnostics import enclose_root, sure_success_check
from miranda.dyadic import RoundingContext

HERE = Path(__file__).resolve().parent
CTX = RoundingContext(precision_bits=53)


def main() -> None:
    for fname in ("sqrt2.txt", "circle_line.txt"):
        problem = parse_problem((HERE / "systems" / fname).read_text())
        print(f"== {fname}")
        for hint in problem.root_hints:
            enc = enclose_root(problem.system, hint, CTX)
            rep = sure_success_check(problem.system, problem.roi, enc, CTX)
            print(f"root near {[float(w) for w in enc.witness]}")
            for name, r in rep.radii.items():
                print(f"  {name:12s} {float(r.value):.6f}{'  (capped)' if r.capped else ''}")
            for t in rep.trials:
                tag = "required" if t.required else "extra"
                print(f"  {t.test} width {t.width:<10.6g} {t.successes}/{t.boxes} ({tag})")
            print(f"  widest width that always succeeded: {rep.widest_success}")
            print(f"  all required trials pass: {rep.passed}")


if __name__ == "__main__":
    main()
