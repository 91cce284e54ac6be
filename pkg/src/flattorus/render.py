"""Static SVG pictures of torus partitions."""

from __future__ import annotations

import math
from typing import List

from .core import HorizontalStrip, LiftedPolygon, Partition, PixelSet, VerticalStrip

SIZE = 1000

PALETTE = (
    "#e6194b", "#3cb44b", "#ffe119", "#4363d8", "#f58231",
    "#911eb4", "#46f0f0", "#f032e6", "#bcf60c", "#fabebe",
    "#008080", "#e6beff", "#9a6324", "#fffac8", "#800000",
    "#aaffc3", "#808000", "#ffd8b1", "#000075", "#808080",
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
)


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _pt(x: float, y: float) -> str:
    # y axis points up in the picture
    return f"{_fmt(SIZE * x)},{_fmt(SIZE * (1.0 - y))}"


def _polygon_copies(r: LiftedPolygon, color: str) -> List[str]:
    pts = [(float(x), float(y)) for x, y in r.vertices]
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    out = []
    for dx in range(-math.ceil(max(xs)), 1 - math.floor(min(xs)) + 1):
        if max(xs) + dx <= 0 or min(xs) + dx >= 1:
            continue
        for dy in range(-math.ceil(max(ys)), 1 - math.floor(min(ys)) + 1):
            if max(ys) + dy <= 0 or min(ys) + dy >= 1:
                continue
            coords = " ".join(_pt(x + dx, y + dy) for x, y in pts)
            out.append(f'<polygon points="{coords}" fill="{color}" stroke="#000" stroke-width="1"/>')
    return out


def _rect(x0, y0, x1, y1, color, stroke=True) -> str:
    extra = ' stroke="#000" stroke-width="1"' if stroke else ""
    return (
        f'<rect x="{_fmt(SIZE * x0)}" y="{_fmt(SIZE * (1 - y1))}" '
        f'width="{_fmt(SIZE * (x1 - x0))}" height="{_fmt(SIZE * (y1 - y0))}" fill="{color}"{extra}/>'
    )


def region_elements(r, color: str) -> List[str]:
    if isinstance(r, LiftedPolygon):
        return _polygon_copies(r, color)
    if isinstance(r, VerticalStrip):
        return [_rect(float(r.lo), 0.0, float(r.hi), 1.0, color)]
    if isinstance(r, HorizontalStrip):
        return [_rect(0.0, float(r.lo), 1.0, float(r.hi), color)]
    if isinstance(r, PixelSet):
        return [_rect(x / r.s, y / r.s, (x + 1) / r.s, (y + 1) / r.s, color, stroke=False) for x, y in r.cells]
    raise TypeError(f"cannot render {type(r).__name__}")


def render_svg(p: Partition, title: str = "") -> str:
    """SVG 1.1 document; the unit square becomes a 1000 x 1000 canvas."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f"<title>{title or f'partition m={p.m} tau={p.tau:.6f}'}</title>",
        '<defs><clipPath id="unit"><rect x="0" y="0" width="1000" height="1000"/></clipPath></defs>',
        '<g clip-path="url(#unit)">',
    ]
    for i, r in enumerate(p.regions):
        color = PALETTE[i % len(PALETTE)]
        lines.append(f'<g id="region-{i}">')
        lines.extend(region_elements(r, color))
        lines.append("</g>")
    lines.append("</g>")
    lines.append('<rect x="0" y="0" width="1000" height="1000" fill="none" stroke="#000" stroke-width="2"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def save_svg(p: Partition, path, title: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_svg(p, title))
