"""Static SVG picture of a planar subdivision run."""

from __future__ import annotations

from pathlib import Path

from .errors import UnsupportedDimension

__all__ = ["render_svg", "emit_svg", "FATE_STYLES"]

FATE_STYLES = {
    "excluded": ("#d9d9d9", "#999999"),
    "subdivided": ("none", "#bbbbbb"),
    "gated": ("none", "#3b6fd4"),
    "discarded": ("#f4b183", "#c55a11"),
    "undecided": ("#ff6b6b", "#b00020"),
    "output": ("#7bc67b", "#1e6b1e"),
}
_ORDER = ("subdivided", "excluded", "discarded", "gated", "undecided", "output")


def render_svg(result, size: int = 640) -> str:
    """SVG text: every traced box colored by its fate, output boxes ``2B'`` drawn on top."""
    if result.system.n != 2:
        raise UnsupportedDimension(f"SVG output needs n = 2, got n = {result.system.n}")
    outer = result.roi.dilated(2)
    x0, y0 = float(outer[0].lo), float(outer[1].lo)
    span = float(outer[0].hi - outer[0].lo)
    pad = 20
    k = (size - 2 * pad) / span

    def rect(box, fill, stroke, extra=""):
        x = pad + (float(box[0].lo) - x0) * k
        y = pad + (y0 + span - float(box[1].hi)) * k  # flip y
        w = float(box[0].hi - box[0].lo) * k
        h = float(box[1].hi - box[1].lo) * k
        return (f'<rect x="{x:.3f}" y="{y:.3f}" width="{w:.3f}" height="{h:.3f}" '
                f'fill="{fill}" stroke="{stroke}" stroke-width="0.6"{extra}/>')

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
             rect(outer, "none", "#777777", ' stroke-dasharray="4 3"'),
             rect(result.roi.realize(), "none", "black", ' stroke-width="1.5"')]
    by_fate: dict = {}
    for box, fate in result.stats.trace:
        by_fate.setdefault(fate, []).append(box)
    for fate in _ORDER:
        fill, stroke = FATE_STYLES[fate]
        for box in by_fate.get(fate, []):
            parts.append(rect(box.realize(), fill, stroke, ' fill-opacity="0.6"'))
    for ob in result.boxes:
        parts.append(rect(ob.box, "none", FATE_STYLES["output"][1], ' stroke-width="2"'))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(result, path) -> Path:
    path = Path(path)
    path.write_text(render_svg(result))
    return path
