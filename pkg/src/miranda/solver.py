"""Subdivision root isolation driven by the C0, JC/JC* and MK box tests.

Boxes leave the main queue widest first, first in first out among equal
widths, which for aligned hypercubes is plain breadth-first order.  A box
whose Jacobian test succeeds starts an inner refinement search for a
sub-box ``B'`` on which MK succeeds; ``2B'`` is then reported and every
queued box inside ``3B`` is dropped.
"""

from __future__ import annotations

import heapq
import time
from collections import Counter, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .boxes import ROI, AlignedBox, as_fraction, contained_in_dilated
from .dyadic import Dyadic, RoundingContext, default_context
from .expr import FunctionSystem
from .interval import Interval, box_contains, interiors_overlap
from .predicates import PredicateOutcome, test_c0, test_jc, test_jc_strict, test_mk

__all__ = ["SolverConfig", "OutputBox", "SolverStats", "IsolationOutput", "isolate",
           "verify_isolation", "VerificationReport"]

JACOBIAN_MODES = ("jc", "jcs")


@dataclass(frozen=True)
class SolverConfig:
    max_depth: int = 24
    context: RoundingContext = field(default_factory=default_context)
    jacobian_mode: str = "jc"
    stats_enabled: bool = False

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.jacobian_mode not in JACOBIAN_MODES:
            raise ValueError(f"jacobian_mode must be one of {JACOBIAN_MODES}")


@dataclass(frozen=True)
class OutputBox:
    """``2B'`` for the MK-certified box ``B'`` found under the gated ancestor ``B``."""

    generator: AlignedBox
    ancestor: AlignedBox
    certificate: str
    margins: tuple[Dyadic, ...] = ()

    @property
    def box(self) -> tuple[Interval, ...]:
        return self.generator.dilate(2)

    def contains_point(self, point: Sequence) -> bool:
        return all(iv.lo.as_fraction() <= as_fraction(x) <= iv.hi.as_fraction()
                   for iv, x in zip(self.box, point))


@dataclass
class SolverStats:
    """Per-test call and success counts; the box trace and discard audit when enabled."""

    calls: Counter = field(default_factory=Counter)
    successes: Counter = field(default_factory=Counter)
    boxes_processed: int = 0
    max_depth: int = 0
    wall_time: float = 0.0
    trace: list = field(default_factory=list)
    discards: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def record(self, outcome: PredicateOutcome) -> PredicateOutcome:
        self.calls[outcome.test] += 1
        if outcome.success:
            self.successes[outcome.test] += 1
        return outcome


@dataclass(frozen=True)
class IsolationOutput:
    system: FunctionSystem
    roi: ROI
    config: SolverConfig
    boxes: tuple[OutputBox, ...]
    status: str
    undecided: tuple[AlignedBox, ...]
    stats: SolverStats = field(compare=False)

    @property
    def complete(self) -> bool:
        return self.status == "complete"


class _Queue:
    """Width-ordered FIFO queue with removal, keyed by (depth, insertion counter)."""

    def __init__(self):
        self._heap: list = []
        self._live: dict = {}
        self._counter = 0

    def push(self, box: AlignedBox) -> None:
        key = (box.depth, self._counter)
        self._counter += 1
        heapq.heappush(self._heap, key)
        self._live[key] = box

    def pop(self) -> AlignedBox:
        while True:
            key = heapq.heappop(self._heap)
            box = self._live.pop(key, None)
            if box is not None:
                return box

    def remove_if(self, pred) -> list[AlignedBox]:
        gone = [k for k, b in self._live.items() if pred(b)]
        return [self._live.pop(k) for k in gone]

    def __bool__(self) -> bool:
        return bool(self._live)


def isolate(system: FunctionSystem, roi: ROI, config: SolverConfig | None = None
            ) -> IsolationOutput:
    """Isolate the simple zeros of ``system`` in ``roi``; outputs may reach into ``2·roi``."""
    config = config or SolverConfig()
    if roi.n != system.n:
        raise ValueError(f"ROI has dimension {roi.n}, system has {system.n}")
    ctx = config.context
    stats = SolverStats()
    traced = config.stats_enabled
    strict = config.jacobian_mode == "jcs"
    outputs: list[OutputBox] = []
    undecided: list[AlignedBox] = []
    start = time.perf_counter()

    def fate(box, what):
        if traced:
            stats.trace.append((box, what))

    def split(box, queue_push):
        if box.depth >= config.max_depth:
            undecided.append(box)
            fate(box, "undecided")
            return
        fate(box, "subdivided")
        for child in box.subdivide():
            queue_push(child)

    queue = _Queue()
    queue.push(roi.root())
    while queue:
        B = queue.pop()
        stats.boxes_processed += 1
        stats.max_depth = max(stats.max_depth, B.depth)
        c0 = stats.record(test_c0(system, B, ctx))
        if c0.success:
            fate(B, "excluded")
            continue
        if strict:
            gate = stats.record(test_jc_strict(system, B, ctx)).success \
                and stats.record(test_mk(system, B, ctx, scale_factor=Fraction(3, 2))).success
            if gate and traced:
                stats.events.append(("jcs", B))
        else:
            gate = stats.record(test_jc(system, B, ctx)).success
        if not gate:
            split(B, queue.push)
            continue
        fate(B, "gated")
        inner = deque([B])
        first = True
        while inner:
            Bp = inner.popleft()
            if not first:
                stats.boxes_processed += 1
                stats.max_depth = max(stats.max_depth, Bp.depth)
                c0 = stats.record(test_c0(system, Bp, ctx))
            first = False
            if c0.success:
                fate(Bp, "excluded")
                continue
            mk = stats.record(test_mk(system, Bp, ctx))
            if mk.success:
                out = OutputBox(Bp, B, config.jacobian_mode, tuple(mk.details["margins"]))
                outputs.append(out)
                fate(Bp, "output")
                for gone in queue.remove_if(lambda q: contained_in_dilated(q, B, 3)):
                    fate(gone, "discarded")
                    if traced:
                        stats.discards.append((gone, len(outputs) - 1))
                break
            split(Bp, inner.append)
    stats.wall_time = time.perf_counter() - start
    status = "depth_exceeded" if undecided else "complete"
    return IsolationOutput(system, roi, config, tuple(outputs), status, tuple(undecided), stats)


# -- verification --------------------------------------------------------------------------------


@dataclass(frozen=True)
class VerificationReport:
    violations: tuple[str, ...]
    roots_matched: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_isolation(output: IsolationOutput, system: FunctionSystem | None = None,
                     known_roots: Iterable[Sequence] | None = None) -> VerificationReport:
    """Check disjointness, containment in ``2B0`` and, given roots, the root/box bijection.

    ``known_roots`` should list every root in ``2B0``; roots in ``B0`` must be
    covered exactly once, and every output box must hold exactly one root.
    """
    problems = []
    boxes = output.boxes
    for a in range(len(boxes)):
        for b in range(a + 1, len(boxes)):
            if interiors_overlap(boxes[a].box, boxes[b].box):
                problems.append(f"output boxes {a} and {b} overlap")
            elif not boxes[a].generator.interiors_disjoint(boxes[b].generator):
                problems.append(f"generators of output boxes {a} and {b} are nested")
    outer = output.roi.dilated(2)
    for a, ob in enumerate(boxes):
        if not box_contains(outer, ob.box):
            problems.append(f"output box {a} leaves 2B0")
    matched = 0
    if known_roots is not None:
        roots = [tuple(as_fraction(x) for x in r) for r in known_roots]
        inner = output.roi.realize()
        for r in roots:
            hits = [a for a, ob in enumerate(boxes) if ob.contains_point(r)]
            in_roi = all(iv.lo.as_fraction() <= x <= iv.hi.as_fraction()
                         for iv, x in zip(inner, r))
            if len(hits) > 1:
                problems.append(f"root {tuple(map(float, r))} lies in boxes {hits}")
            elif in_roi and not hits:
                problems.append(f"root {tuple(map(float, r))} in B0 is not covered")
        for a, ob in enumerate(boxes):
            count = sum(1 for r in roots if ob.contains_point(r))
            if count == 1:
                matched += 1
            else:
                problems.append(f"output box {a} contains {count} known roots")
    return VerificationReport(tuple(problems), matched)
