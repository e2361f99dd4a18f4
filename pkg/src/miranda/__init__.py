"""Certified real root isolation with Miranda-type box tests over dyadic intervals."""

from __future__ import annotations

from .boxes import ROI, AlignedBox
from .diagnostics import enclose_root, sure_success_check
from .dyadic import Dyadic, RoundingContext
from .errors import MirandaError
from .expr import FunctionSystem, parse_expression
from .interval import Interval
from .predicates import test_c0, test_jc, test_jc_strict, test_mk
from .problem import parse_problem, parse_system
from .solver import IsolationOutput, SolverConfig, isolate, verify_isolation

__all__ = [
    "ROI", "AlignedBox", "Dyadic", "RoundingContext", "Interval", "FunctionSystem",
    "MirandaError", "parse_expression", "parse_problem", "parse_system",
    "test_c0", "test_jc", "test_jc_strict", "test_mk",
    "isolate", "verify_isolation", "SolverConfig", "IsolationOutput",
    "enclose_root", "sure_success_check",
]
