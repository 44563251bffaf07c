"""Standalone SVG plots of occupancy octagons on the road plane."""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")
SCALE = 12.0  # px per metre
MARGIN = 20.0


def _points(verts, x0, y1):
    return " ".join(f"{MARGIN + (x - x0) * SCALE:.2f},{MARGIN + (y1 - y) * SCALE:.2f}" for x, y in verts)


def occupancy_svg(polygons, road_bounds=None, title="", bodies=None) -> str:
    """``polygons``: list over vehicles of lists over steps of (8, 2) vertex arrays.

    ``bodies`` optionally adds one (4, 2) footprint per vehicle (current pose).
    Each octagon is a ``<polygon class="occupancy">`` tagged with its vehicle
    and step.
    """
    allv = [np.asarray(p) for veh in polygons for p in veh]
    if bodies:
        allv += [np.asarray(b) for b in bodies]
    pts = np.concatenate(allv) if allv else np.zeros((1, 2))
    x0, x1 = pts[:, 0].min() - 2, pts[:, 0].max() + 2
    y0, y1 = pts[:, 1].min() - 2, pts[:, 1].max() + 2
    if road_bounds is not None:
        y0, y1 = min(y0, road_bounds[0] - 1), max(y1, road_bounds[1] + 1)
    w = (x1 - x0) * SCALE + 2 * MARGIN
    h = (y1 - y0) * SCALE + 2 * MARGIN
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0f}" height="{h:.0f}" '
           f'viewBox="0 0 {w:.2f} {h:.2f}">',
           f"<title>{escape(title)}</title>",
           '<rect width="100%" height="100%" fill="white"/>']
    if road_bounds is not None:
        for yb in road_bounds:
            yy = MARGIN + (y1 - yb) * SCALE
            out.append(f'<line class="road-edge" x1="0" y1="{yy:.2f}" x2="{w:.2f}" y2="{yy:.2f}" '
                       'stroke="black" stroke-width="1.5"/>')
    for i, veh in enumerate(polygons):
        color = PALETTE[i % len(PALETTE)]
        for k, verts in enumerate(veh):
            out.append(f'<polygon class="occupancy" data-vehicle="{i}" data-step="{k + 1}" '
                       f'points="{_points(verts, x0, y1)}" fill="{color}" fill-opacity="0.12" '
                       f'stroke="{color}" stroke-width="1"/>')
    for i, verts in enumerate(bodies or []):
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<polygon class="body" data-vehicle="{i}" points="{_points(verts, x0, y1)}" '
                   f'fill="{color}" fill-opacity="0.6" stroke="black" stroke-width="1"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def body_corners(x, y, theta, length, width) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    R = np.array([[c, -s], [s, c]])
    local = np.array([[1, 1], [-1, 1], [-1, -1], [1, -1]]) * [length / 2, width / 2]
    return local @ R.T + [x, y]
