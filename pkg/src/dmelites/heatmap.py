"""SVG heatmaps of 2-D archives.

Each CVT cell is drawn as a disc at its centroid, colored by elite fitness on
a viridis-like scale; empty cells get a fixed grey.
"""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .archive import EliteArchive

EMPTY_COLOR = "#d9d9d9"
# viridis sampled at 0, .25, .5, .75, 1
_ANCHORS = np.array([
    [68, 1, 84],
    [59, 82, 139],
    [33, 145, 140],
    [94, 201, 98],
    [253, 231, 37],
], dtype=np.float64)

_SIZE = 400
_MARGIN = 20
_LEGEND_W = 20


def color_for(t: float) -> str:
    """Hex color for ``t`` in [0, 1]."""
    t = min(max(float(t), 0.0), 1.0)
    pos = t * (len(_ANCHORS) - 1)
    i = min(int(pos), len(_ANCHORS) - 2)
    rgb = _ANCHORS[i] + (pos - i) * (_ANCHORS[i + 1] - _ANCHORS[i])
    return "#{:02x}{:02x}{:02x}".format(*(int(round(c)) for c in rgb))


def render_heatmap(centroids: np.ndarray, fitness: np.ndarray, path, title: str = "") -> None:
    """Write the SVG for ``centroids`` (k x 2) and per-cell ``fitness`` (NaN = empty)."""
    centroids = np.asarray(centroids, dtype=np.float64)
    fitness = np.asarray(fitness, dtype=np.float64)
    if centroids.ndim != 2 or centroids.shape[1] != 2:
        raise ValueError(f"heatmaps need a 2-D behavior space, got centroids of shape {centroids.shape}")
    k = centroids.shape[0]
    filled = ~np.isnan(fitness)
    lo = float(fitness[filled].min()) if filled.any() else math.nan
    hi = float(fitness[filled].max()) if filled.any() else math.nan
    radius = max(1.0, 0.6 * _SIZE / math.sqrt(k))

    width = _SIZE + 2 * _MARGIN + _LEGEND_W + 90
    height = _SIZE + 2 * _MARGIN + 20
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<text x="{_MARGIN}" y="14" font-size="12" font-family="sans-serif">{escape(title)}</text>',
        f'<rect x="{_MARGIN}" y="{_MARGIN + 10}" width="{_SIZE}" height="{_SIZE}" fill="white" stroke="black"/>',
        '<g class="cells">',
    ]
    for (cx, cy), f, on in zip(centroids, fitness, filled):
        if on:
            t = 0.5 if hi == lo else (f - lo) / (hi - lo)
            fill = color_for(t)
        else:
            fill = EMPTY_COLOR
        x = _MARGIN + cx * _SIZE
        y = _MARGIN + 10 + (1.0 - cy) * _SIZE
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius:.2f}" fill="{fill}"/>')
    out.append("</g>")

    lx = _MARGIN + _SIZE + 20
    ly = _MARGIN + 10
    out.append('<defs><linearGradient id="scale" x1="0" y1="1" x2="0" y2="0">')
    for i in range(len(_ANCHORS)):
        t = i / (len(_ANCHORS) - 1)
        out.append(f'<stop offset="{t:.2f}" stop-color="{color_for(t)}"/>')
    out.append("</linearGradient></defs>")
    out.append('<g class="legend">')
    if filled.any():
        out.append(f'<rect x="{lx}" y="{ly}" width="{_LEGEND_W}" height="{_SIZE}" fill="url(#scale)"/>')
        out.append(f'<text x="{lx + _LEGEND_W + 4}" y="{ly + 10}" font-size="10" '
                   f'font-family="sans-serif">{hi:.4g}</text>')
        out.append(f'<text x="{lx + _LEGEND_W + 4}" y="{ly + _SIZE}" font-size="10" '
                   f'font-family="sans-serif">{lo:.4g}</text>')
    else:
        out.append(f'<rect x="{lx}" y="{ly}" width="{_LEGEND_W}" height="{_SIZE}" fill="{EMPTY_COLOR}"/>')
        out.append(f'<text x="{lx + _LEGEND_W + 4}" y="{ly + 10}" font-size="10" '
                   f'font-family="sans-serif">empty</text>')
    out.append(f'<text x="{lx}" y="{ly + _SIZE + 14}" font-size="10" font-family="sans-serif">'
               f'fitness ({int(filled.sum())}/{k} cells)</text>')
    out.append("</g>")
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def emit_heatmap(archive: EliteArchive, path, title: str = "") -> None:
    if archive.index.dim != 2:
        raise ValueError(f"heatmaps need a 2-D behavior space, archive is {archive.index.dim}-D")
    fitness = np.where(archive.filled, archive.fitness, np.nan)
    render_heatmap(archive.index.centroids, fitness, path, title)
