"""Deterministic SVG and CSV output for slice polylines.

Coordinates are symplectic ``(x, y)`` with y pointing up; one unit is
100 px.  Numbers are written with a fixed precision so figures diff cleanly.
"""

from __future__ import annotations

import csv
from typing import Optional, Sequence

import numpy as np

from .core.curves import PlanarCurve

UNIT_PX = 100.0
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def svg_document(curves: Sequence[PlanarCurve], margin: float = 0.1, title: Optional[str] = None) -> str:
    """SVG text with one ``<polyline>`` per curve and the coordinate axes."""
    pts = np.vstack([c.points for c in curves]) if curves else np.zeros((1, 2))
    lo = pts.min(axis=0) - margin
    hi = pts.max(axis=0) + margin
    w, h = (hi - lo) * UNIT_PX

    def px(p):
        return (p[:, 0] - lo[0]) * UNIT_PX, (hi[1] - p[:, 1]) * UNIT_PX

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.2f}" height="{h:.2f}" '
        f'viewBox="0 0 {w:.2f} {h:.2f}">'
    ]
    if title:
        out.append(f"<title>{title}</title>")
    ox, oy = px(np.zeros((1, 2)))
    out.append(
        f'<g class="axes" stroke="#999" stroke-width="0.5">'
        f'<line x1="0" y1="{oy[0]:.2f}" x2="{w:.2f}" y2="{oy[0]:.2f}"/>'
        f'<line x1="{ox[0]:.2f}" y1="0" x2="{ox[0]:.2f}" y2="{h:.2f}"/></g>'
    )
    for i, c in enumerate(curves):
        x, y = px(c.points)
        coords = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(x, y))
        label = f' data-label="{c.label}"' if c.label else ""
        out.append(
            f'<polyline{label} fill="none" stroke="{COLORS[i % len(COLORS)]}" stroke-width="1.5" points="{coords}"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path: str, curves: Sequence[PlanarCurve], title: Optional[str] = None) -> None:
    with open(path, "w") as fh:
        fh.write(svg_document(curves, title=title))


def write_csv(path: str, curves: Sequence[PlanarCurve]) -> None:
    """Rows ``curve, index, x, y``."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["curve", "index", "x", "y"])
        for ci, c in enumerate(curves):
            for i, (x, y) in enumerate(c.points):
                wr.writerow([c.label or ci, i, f"{x:.12g}", f"{y:.12g}"])


def write_slice(path: str, curves: Sequence[PlanarCurve], title: Optional[str] = None) -> None:
    """Write SVG, or CSV when the path ends in ``.csv``."""
    if path.lower().endswith(".csv"):
        write_csv(path, curves)
    else:
        write_svg(path, curves, title)
