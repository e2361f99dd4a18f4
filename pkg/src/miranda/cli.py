"""Command-line driver: ``miranda isolate|diagnose|verify FILE``.

Exit codes: 0 success, 1 error (or failed checks for diagnose/verify),
2 isolation stopped at the depth limit.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from importlib import metadata
from pathlib import Path

from .boxes import ROI
from .diagnostics import (depth_bound, enclose_root, estimate_exclusion_margin,
                          sure_success_check)
from .dyadic import DEFAULT_PRECISION, RoundingContext
from .errors import MirandaError
from .problem import parse_problem, parse_roi
from .report import (box_record, decimal_string, dumps, isolation_record, radius_record)
from .solver import SolverConfig, isolate, verify_isolation
from .svg import emit_svg

__all__ = ["main", "build_parser", "run_isolate", "run_diagnose", "run_verify"]

EXIT_OK, EXIT_ERROR, EXIT_DEPTH = 0, 1, 2
_ROI_TOKEN = re.compile(r"^-?[\d./eE+-]+,-?[\d./eE+-]+$")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="miranda",
                                     description="Certified isolation of simple real roots.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="problem file ('-' reads standard input)")
    common.add_argument("--roi", help="region of interest, e.g. '-2,2 -2,2' or '[-2,2]x[-2,2]'")
    common.add_argument("--max-depth", type=int)
    common.add_argument("--precision", type=int,
                        help="working precision in bits (default: $MIRANDA_PRECISION or 53)")
    common.add_argument("--max-precision", type=int, help="precision escalation ceiling")
    common.add_argument("--jacobian-test", choices=("jc", "jcs"))
    common.add_argument("--no-accuracy-check", action="store_true",
                        help="skip the high-precision cross-check of box forms")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--timing", action="store_true",
                        help="include wall time (makes JSON output run-dependent)")
    iso = sub.add_parser("isolate", parents=[common], help="isolate the roots in the ROI")
    iso.add_argument("--stats", action="store_true", help="record the box trace and discards")
    iso.add_argument("--svg", help="write a picture of the subdivision (n = 2 only)")
    diag = sub.add_parser("diagnose", parents=[common],
                          help="certified sure-success radii and theory checks per root")
    diag.add_argument("--auto-root", action="store_true",
                      help="take root hints from an isolation run")
    diag.add_argument("--samples", type=int, default=256,
                      help="sample count for the (uncertified) exclusion margin")
    sub.add_parser("verify", parents=[common],
                   help="isolate, then check disjointness, containment and root hints")
    return parser


def _normalize_argv(argv: list[str]) -> list[str]:
    """Glue ``--roi -2,2 -2,2`` into one token; argparse would read ``-2,2`` as a flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok == "--roi":
            parts = []
            i += 1
            while i < len(argv) and _ROI_TOKEN.match(argv[i]):
                parts.append(argv[i])
                i += 1
            if not parts and i < len(argv):
                parts.append(argv[i])
                i += 1
            out.append("--roi=" + " ".join(parts))
            continue
        out.append(tok)
        i += 1
    return out


def _load(args):
    text = sys.stdin.read() if args.input == "-" else Path(args.input).read_text()
    problem = parse_problem(text)
    roi = ROI.from_bounds(parse_roi(args.roi)) if args.roi else problem.roi
    if roi is None:
        raise MirandaError("no ROI given (use 'roi = ...' in the file or --roi)")
    if roi.n != problem.system.n:
        raise MirandaError(f"ROI has dimension {roi.n}, system has {problem.system.n}")
    opts = problem.options
    env_precision = int(os.environ.get("MIRANDA_PRECISION", DEFAULT_PRECISION))
    precision = args.precision or opts.get("precision") or env_precision
    max_precision = args.max_precision or opts.get("max_precision") or max(4096, precision)
    ctx = RoundingContext(precision_bits=precision, max_precision_bits=max_precision,
                          check_accuracy=not args.no_accuracy_check)
    mode = args.jacobian_test or opts.get("jacobian_test", "jc")
    config = SolverConfig(max_depth=args.max_depth or opts.get("max_depth", 24), context=ctx,
                          jacobian_mode=mode,
                          stats_enabled=bool(getattr(args, "stats", False) or
                                             getattr(args, "svg", None)))
    return problem, roi, config


def _manifest(args, command: str) -> dict:
    return {"command": command, "input": args.input, "tool": "miranda",
            "version": _version()}


def _emit(args, record: dict, text: str) -> None:
    payload = dumps(record) if args.format == "json" else text
    if args.output:
        Path(args.output).write_text(payload)
    else:
        sys.stdout.write(payload)


def _box_text(box) -> str:
    return " x ".join(f"[{decimal_string(iv.lo, 12)}, {decimal_string(iv.hi, 12)}]"
                      for iv in box)


def run_isolate(args) -> int:
    problem, roi, config = _load(args)
    out = isolate(problem.system, roi, config)
    record = {"manifest": _manifest(args, "isolate"),
              **isolation_record(out, include_timing=args.timing)}
    lines = [f"{i}: {_box_text(ob.box)}  depth {ob.generator.depth}  via {ob.certificate}"
             for i, ob in enumerate(out.boxes)]
    lines += [f"undecided: {_box_text(b.realize())}" for b in out.undecided]
    calls = ", ".join(f"{k} {v}" for k, v in sorted(out.stats.calls.items()))
    lines.append(f"status {out.status}; {len(out.boxes)} box(es); tests: {calls}; "
                 f"max depth {out.stats.max_depth}"
                 + (f"; {out.stats.wall_time:.3f} s" if args.timing else ""))
    _emit(args, record, "\n".join(lines) + "\n")
    if args.svg:
        emit_svg(out, args.svg)
    return EXIT_OK if out.complete else EXIT_DEPTH


def run_diagnose(args) -> int:
    problem, roi, config = _load(args)
    system, ctx = problem.system, config.context
    hints = list(problem.root_hints)
    if args.auto_root:
        out = isolate(system, roi, config)
        hints += [ob.generator.center() for ob in out.boxes]
    if not hints and not args.auto_root:
        raise MirandaError("diagnose needs root hints ('root = ...') or --auto-root")
    roots, reports = [], []
    for h in hints:
        enc = enclose_root(system, h, ctx)
        if any(enc.witness == r.witness for r in roots):
            continue
        roots.append(enc)
    roots.sort(key=lambda r: r.witness)
    for enc in roots:
        rep = sure_success_check(system, roi, enc, ctx)
        reports.append((enc, rep))
    finite = [float(min(rep.radii["lambda2"].value, rep.radii["lambda3"].value))
              for _, rep in reports]
    margin = estimate_exclusion_margin(system, roi, [r.witness for r in roots],
                                       samples=args.samples, ell1=min(finite, default=0.0),
                                       ctx=ctx)
    bound = depth_bound(float(roi.width), finite + [margin["lambda_c0"]])
    passed = all(rep.passed for _, rep in reports)
    record = {
        "manifest": _manifest(args, "diagnose"),
        "roi": {"box": box_record(roi.realize())},
        "roots": [{
            "witness": [w.to_hex() for w in enc.witness],
            "witness_decimal": [decimal_string(w, 17) for w in enc.witness],
            "exact": enc.exact,
            "enclosure": box_record(enc.box),
            "radii": {k: radius_record(v) for k, v in rep.radii.items()},
            "trials": [{"test": t.test, "depth": t.depth, "width": t.width, "boxes": t.boxes,
                        "successes": t.successes, "required": t.required} for t in rep.trials],
            "side_condition_trials": len(rep.side_condition),
            "side_condition_ok": all(ok for _, ok in rep.side_condition),
            "widest_success": rep.widest_success,
            "conservative": rep.conservative,
            "passed": rep.passed,
        } for enc, rep in reports],
        "exclusion_estimate": {k: (round(v, 12) if isinstance(v, float) else v)
                               for k, v in margin.items()},
        "depth_bound": bound,
        "passed": passed,
    }
    lines = []
    for enc, rep in reports:
        radii = ", ".join(f"{k}={float(v.value):.6g}{'(cap)' if v.capped else ''}"
                          for k, v in rep.radii.items())
        lines.append(f"root {[float(w) for w in enc.witness]}: {radii}; "
                     f"{'pass' if rep.passed else 'FAIL'}")
    lines.append(f"exclusion estimate (not certified): d0={margin['d0']:.6g}, "
                 f"lambda_C0={margin['lambda_c0']:.6g}; depth bound {bound}")
    _emit(args, record, "\n".join(lines) + "\n")
    return EXIT_OK if passed else EXIT_ERROR


def run_verify(args) -> int:
    problem, roi, config = _load(args)
    out = isolate(problem.system, roi, config)
    known = None
    if problem.root_hints:
        known = [enclose_root(problem.system, h, config.context).witness
                 for h in problem.root_hints]
    report = verify_isolation(out, problem.system, known)
    record = {"manifest": _manifest(args, "verify"), "status": out.status,
              "boxes": len(out.boxes), "violations": list(report.violations),
              "roots_checked": known is not None, "ok": report.ok}
    text = (f"{len(out.boxes)} box(es), status {out.status}: "
            + ("ok" if report.ok else "; ".join(report.violations)) + "\n")
    _emit(args, record, text)
    if not report.ok:
        return EXIT_ERROR
    return EXIT_OK if out.complete else EXIT_DEPTH


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(_normalize_argv(argv))
    runner = {"isolate": run_isolate, "diagnose": run_diagnose, "verify": run_verify}
    try:
        return runner[args.command](args)
    except (MirandaError, SyntaxError, OSError, ValueError) as exc:
        print(f"miranda: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
