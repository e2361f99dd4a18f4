"""JSON-ready records for isolation results and diagnostics.

Dyadic values are written as hex strings (``-0x1bp-3``), which are the
normative encoding; decimal renderings sit alongside for people.
"""

from __future__ import annotations

import decimal
import json
from fractions import Fraction
from typing import Sequence

from .boxes import AlignedBox
from .dyadic import Dyadic
from .interval import Interval, _make

__all__ = ["dyadic_record", "interval_record", "box_record", "box_from_record",
           "isolation_record", "dumps", "decimal_string"]

SCHEMA_VERSION = 1


def decimal_string(x: Dyadic, digits: int = 20) -> str:
    f = x.as_fraction()
    ctx = decimal.Context(prec=digits)
    return str(ctx.divide(decimal.Decimal(f.numerator), decimal.Decimal(f.denominator)))


def dyadic_record(x: Dyadic) -> str:
    return x.to_hex()


def interval_record(iv: Interval) -> dict:
    return {"lo": iv.lo.to_hex(), "hi": iv.hi.to_hex(),
            "lo_decimal": decimal_string(iv.lo), "hi_decimal": decimal_string(iv.hi)}


def box_record(box: Sequence[Interval]) -> list[dict]:
    return [interval_record(iv) for iv in box]


def box_from_record(record: Sequence[dict]) -> tuple[Interval, ...]:
    """Inverse of :func:`box_record`; only the hex fields are read."""
    return tuple(_make(Dyadic.from_hex(r["lo"]), Dyadic.from_hex(r["hi"])) for r in record)


def aligned_record(b: AlignedBox) -> dict:
    return {"depth": b.depth, "coords": list(b.coords)}


def isolation_record(out, *, include_timing: bool = False) -> dict:
    """Everything a run produced, with no timing unless asked (so reruns are byte-identical)."""
    cfg = out.config
    ctx = cfg.context
    boxes = []
    for i, ob in enumerate(out.boxes):
        boxes.append({
            "index": i,
            "box": box_record(ob.box),
            "generator": {**aligned_record(ob.generator), "box": box_record(ob.generator.realize())},
            "ancestor": aligned_record(ob.ancestor),
            "certificate": {
                "jacobian_test": ob.certificate,
                "mk_margins": [m.to_hex() for m in ob.margins],
                "mk_min_margin": min(ob.margins).to_hex() if ob.margins else None,
                "mk_min_margin_decimal": decimal_string(min(ob.margins), 8) if ob.margins else None,
            },
        })
    stats = out.stats
    rec = {
        "schema": SCHEMA_VERSION,
        "status": out.status,
        "config": {
            "max_depth": cfg.max_depth,
            "precision_bits": ctx.precision_bits,
            "max_precision_bits": ctx.max_precision_bits,
            "check_accuracy": ctx.check_accuracy,
            "jacobian_test": cfg.jacobian_mode,
        },
        "system": {
            "vars": list(out.system.names),
            "components": [c.to_string(out.system.names) for c in out.system.components],
        },
        "roi": {"box": box_record(out.roi.realize()), "notes": list(out.roi.notes)},
        "boxes": boxes,
        "undecided": [{**aligned_record(b), "box": box_record(b.realize())}
                      for b in out.undecided],
        "stats": {
            "calls": dict(sorted(stats.calls.items())),
            "successes": dict(sorted(stats.successes.items())),
            "boxes_processed": stats.boxes_processed,
            "max_depth": stats.max_depth,
            "outputs": len(out.boxes),
        },
    }
    if include_timing:
        rec["stats"]["wall_time_s"] = round(stats.wall_time, 6)
    if cfg.stats_enabled:
        fates: dict = {}
        for _, what in stats.trace:
            fates[what] = fates.get(what, 0) + 1
        rec["stats"]["fates"] = dict(sorted(fates.items()))
        rec["stats"]["discards"] = [{**aligned_record(b), "output": k}
                                    for b, k in stats.discards]
    return rec


def radius_record(r) -> dict:
    return {"value": r.value.to_hex(), "decimal": decimal_string(r.value, 10),
            "capped": r.capped}


def _jsonable(x):
    if isinstance(x, Dyadic):
        return x.to_hex()
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Interval):
        return interval_record(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, indent=2, default=_jsonable) + "\n"
