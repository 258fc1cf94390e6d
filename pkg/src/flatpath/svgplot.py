"""Minimal native SVG writer for survivor-function curves (no plot library)."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#e377c2", "#17becf"]

_WIDTH, _HEIGHT = 640, 420
_ML, _MR, _MT, _MB = 60, 20, 20, 50   # margins


def write_svg(path, curves, title: str | None = None) -> None:
    """Write CCDF polylines with axes and tick labels.

    curves is a list of (label, grid, values) triples sharing units.
    """
    if not curves:
        raise ValueError("no curves to plot")
    x_max = max(float(np.max(g)) for _, g, _ in curves)
    x_min = min(float(np.min(g)) for _, g, _ in curves)
    y_max = max(1.0, max(float(np.max(v)) for _, _, v in curves))
    y_min = 0.0
    if x_max <= x_min:
        x_max = x_min + 1.0

    pw = _WIDTH - _ML - _MR
    ph = _HEIGHT - _MT - _MB

    def sx(x):
        return _ML + (x - x_min) / (x_max - x_min) * pw

    def sy(y):
        return _MT + (y_max - y) / (y_max - y_min) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_ML}" y1="{_MT + ph}" x2="{_ML + pw}" y2="{_MT + ph}" '
        f'stroke="black" stroke-width="1"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ph}" '
        f'stroke="black" stroke-width="1"/>',
    ]
    for i in range(5):
        xv = x_min + i * (x_max - x_min) / 4
        yv = y_min + i * (y_max - y_min) / 4
        parts.append(f'<line x1="{sx(xv):.2f}" y1="{_MT + ph}" x2="{sx(xv):.2f}" '
                     f'y2="{_MT + ph + 5}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{sx(xv):.2f}" y="{_MT + ph + 18}" font-size="11" '
                     f'text-anchor="middle">{xv:.3g}</text>')
        parts.append(f'<line x1="{_ML - 5}" y1="{sy(yv):.2f}" x2="{_ML}" '
                     f'y2="{sy(yv):.2f}" stroke="black" stroke-width="1"/>')
        parts.append(f'<text x="{_ML - 8}" y="{sy(yv) + 4:.2f}" font-size="11" '
                     f'text-anchor="end">{yv:.3g}</text>')
    parts.append(f'<text x="{_ML + pw / 2:.2f}" y="{_HEIGHT - 12}" font-size="12" '
                 f'text-anchor="middle">t</text>')
    parts.append(f'<text x="16" y="{_MT + ph / 2:.2f}" font-size="12" '
                 f'text-anchor="middle" transform="rotate(-90 16 {_MT + ph / 2:.2f})">'
                 f'survivor fraction</text>')
    if title:
        parts.append(f'<text x="{_ML + pw / 2:.2f}" y="{_MT - 5}" font-size="13" '
                     f'text-anchor="middle">{escape(title)}</text>')

    for i, (label, grid, values) in enumerate(curves):
        color = _PALETTE[i % len(_PALETTE)]
        pts = " ".join(f"{sx(float(x)):.2f},{sy(float(y)):.2f}"
                       for x, y in zip(grid, values))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        ly = _MT + 16 + 16 * i
        parts.append(f'<line x1="{_ML + pw - 150}" y1="{ly - 4}" x2="{_ML + pw - 125}" '
                     f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{_ML + pw - 120}" y="{ly}" font-size="11">'
                     f'{escape(str(label))}</text>')
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
