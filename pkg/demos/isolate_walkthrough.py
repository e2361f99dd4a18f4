"""Isolate the roots of a small planar system and look at what the solver did.

Run with ``python3 demos/isolate_walkthrough.py``; an SVG of the subdivision is
written next to this file.
"""

from __future__ import annotations

from pathlib import Path

from miranda.problem import parse_problem
from miranda.predicates import test_mk
from miranda.report import decimal_string
from miranda.solver import SolverConfig, isolate, verify_isolation
from miranda.svg import emit_svg

HERE = Path(__file__).resolve().parent


def show(box) -> str:
    return " x ".join(f"[{decimal_string(iv.lo, 10)}, {decimal_string(iv.hi, 10)}]"
                      for iv in box)


def main() -> None:
    problem = parse_problem((HERE / "systems" / "sine_circle.txt").read_text())
    out = isolate(problem.system, problem.roi, SolverConfig(stats_enabled=True))
    print(f"status: {out.status}, {len(out.boxes)} isolating boxes")
    for ob in out.boxes:
        # the output is 2B' for the box B' whose Miranda test succeeded
        print(f"  {show(ob.box)}  (generator depth {ob.generator.depth})")
        again = test_mk(problem.system, ob.generator, out.config.context)
        print(f"    Miranda margins on the faces of 2B': "
              f"{[f'{float(m):.3g}' for m in again.details['margins']]}")
    fates: dict = {}
    for _, what in out.stats.trace:
        fates[what] = fates.get(what, 0) + 1
    print("box fates:", dict(sorted(fates.items())))
    print("predicate calls:", dict(sorted(out.stats.calls.items())))
    print("self-check:", "ok" if verify_isolation(out).ok else "FAILED")
    path = emit_svg(out, HERE / "sine_circle.svg")
    print(f"picture written to {path}")


if __name__ == "__main__":
    main()
