"""Line-oriented problem files.

    # comments start with '#'
    vars x, y
    f1 = x^2 + y^2 - 1
    f2 = x - y
    roi = [-2, 2] x [-2, 2]
    max_depth = 20
    root = 0.7071, 0.7071

Statements are separated by newlines or semicolons.  ``root`` lines are
approximate root hints for diagnostics and may repeat.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .boxes import ROI
from .errors import DimensionMismatch, ExpressionSyntaxError
from .expr import FunctionSystem, parse_expression

__all__ = ["Problem", "parse_problem", "parse_system", "parse_roi", "OPTION_KEYS"]

OPTION_KEYS = {
    "max_depth": int,
    "precision": int,
    "max_precision": int,
    "jacobian_test": str,
}

_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_COMPONENT = re.compile(r"^f(\d+)$")
_INTERVAL = re.compile(r"\[\s*([^,\]]+?)\s*,\s*([^\]]+?)\s*\]")


@dataclass(frozen=True)
class Problem:
    system: FunctionSystem
    roi: ROI | None = None
    options: dict = field(default_factory=dict)
    root_hints: tuple[tuple[Fraction, ...], ...] = ()


def _number(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ExpressionSyntaxError(f"not a number: {text.strip()!r}") from None


def parse_roi(text: str) -> list[tuple[Fraction, Fraction]]:
    """``[a,b]x[c,d]`` or ``a,b;c,d`` into a list of rational sides."""
    text = text.strip()
    if text.startswith("["):
        sides = _INTERVAL.findall(text)
        rest = _INTERVAL.sub("", text).replace("x", "").replace("X", "").replace("*", "").strip()
        if not sides or rest:
            raise ExpressionSyntaxError(f"malformed ROI {text!r}")
    else:
        sides = []
        for part in re.split(r"[;\s]+", text):
            if not part:
                continue
            bits = part.split(",")
            if len(bits) != 2:
                raise ExpressionSyntaxError(f"ROI side {part!r} must be 'lo,hi'")
            sides.append(tuple(bits))
    return [(_number(a), _number(b)) for a, b in sides]


def _statements(text: str):
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0]
        for stmt in line.split(";"):
            stmt = stmt.strip()
            if stmt:
                yield lineno, stmt


def parse_problem(text: str) -> Problem:
    names: list[str] | None = None
    sources: dict[int, tuple[int, str]] = {}
    roi_sides = None
    options: dict = {}
    hints = []
    for lineno, stmt in _statements(text):
        if stmt.startswith("vars") and (len(stmt) == 4 or not (stmt[4].isalnum() or stmt[4] == "_")):
            if names is not None:
                raise ExpressionSyntaxError(f"line {lineno}: variables declared twice")
            names = [v for v in re.split(r"[,\s]+", stmt[4:].strip()) if v]
            for v in names:
                if not _NAME.match(v) or v in ("sin", "cos", "exp"):
                    raise ExpressionSyntaxError(f"line {lineno}: bad variable name {v!r}")
            if len(set(names)) != len(names):
                raise ExpressionSyntaxError(f"line {lineno}: repeated variable name")
            continue
        if "=" not in stmt:
            raise ExpressionSyntaxError(f"line {lineno}: expected 'name = value', got {stmt!r}")
        key, value = (s.strip() for s in stmt.split("=", 1))
        m = _COMPONENT.match(key)
        if m:
            idx = int(m.group(1))
            if idx in sources:
                raise ExpressionSyntaxError(f"line {lineno}: f{idx} defined twice")
            sources[idx] = (lineno, value)
        elif key == "roi":
            roi_sides = parse_roi(value)
        elif key == "root":
            hints.append(tuple(_number(v) for v in value.split(",")))
        elif key in OPTION_KEYS:
            try:
                options[key] = OPTION_KEYS[key](value)
            except ValueError:
                raise ExpressionSyntaxError(f"line {lineno}: bad value for {key}") from None
        else:
            raise ExpressionSyntaxError(f"line {lineno}: unknown setting {key!r}")
    if names is None:
        raise ExpressionSyntaxError("missing 'vars' declaration")
    n = len(names)
    if sorted(sources) != list(range(1, len(sources) + 1)):
        raise DimensionMismatch(f"components must be numbered f1..fN, got "
                                f"{', '.join(f'f{i}' for i in sorted(sources))}")
    if len(sources) != n:
        raise DimensionMismatch(f"{len(sources)} component(s) for {n} variable(s)")
    comps = []
    for i in range(1, n + 1):
        lineno, src = sources[i]
        try:
            comps.append(parse_expression(src, names))
        except ExpressionSyntaxError as exc:
            raise ExpressionSyntaxError(f"line {lineno}: {exc}") from None
    system = FunctionSystem.from_expressions(names, comps)
    roi = None
    if roi_sides is not None:
        if len(roi_sides) != n:
            raise DimensionMismatch(f"ROI has {len(roi_sides)} side(s) for {n} variable(s)")
        roi = ROI.from_bounds(roi_sides)
    for h in hints:
        if len(h) != n:
            raise DimensionMismatch(f"root hint {h} has the wrong dimension")
    return Problem(system, roi, options, tuple(hints))


def parse_system(text: str) -> FunctionSystem:
    """Parse the system part of a problem file (other settings are validated and ignored)."""
    return parse_problem(text).system
