"""Plot-ready output: gnuplot whitespace data and a small hand-written SVG.

Rate reports give columns ``t distance dkw bound_general bound_be`` and a
log-scale chart of distance and bound curves against t.  Characteristic
function grids give columns ``xi re im`` and a linear chart of both parts.
"""

from __future__ import annotations

import math
import warnings
from pathlib import Path

import numpy as np

from ._io import atomic_write
from .fourier import CharGrid
from .stats import RateReport

WIDTH, HEIGHT = 640, 400
MARGIN = 56
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def _fmt(v) -> str:
    return "nan" if v is None or not math.isfinite(v) else repr(float(v))


def _report_table(report: RateReport):
    n = len(report.t_grid)
    gen = report.bound_general or [math.nan] * n
    lines = ["# kacwild plot data v1", "# t distance dkw bound_general bound_be"]
    for t, d, g, b in zip(report.t_grid, report.distances, gen, report.bound_curve):
        lines.append(" ".join(_fmt(v) for v in (t, d, report.dkw_half_width, g, b)))
    return "\n".join(lines) + "\n"


def _grid_table(grid: CharGrid):
    lines = ["# kacwild plot data v1", "# xi re im"]
    for x, v in zip(grid.xi, grid.values):
        lines.append(f"{float(x)!r} {float(v.real)!r} {float(v.imag)!r}")
    return "\n".join(lines) + "\n"


def svg_chart(x, curves: dict, log_y=False, title="", xlabel="t", ylabel="") -> str:
    """Self-contained SVG line chart, one polyline per named curve."""
    x = np.asarray(x, dtype=np.float64)
    ys = {k: np.asarray(v, dtype=np.float64) for k, v in curves.items()}
    allv = np.concatenate([v[np.isfinite(v) & ((v > 0) if log_y else True)] for v in ys.values()])
    if allv.size == 0:
        allv = np.array([1.0])
    lo, hi = float(allv.min()), float(allv.max())
    if log_y:
        lo, hi = math.log10(lo), math.log10(hi)
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5, hi + 0.5
    x0, x1 = float(x.min()), float(x.max())
    if x1 - x0 < 1e-12:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(v):
        return MARGIN + (v - x0) / (x1 - x0) * pw

    def py(v):
        if log_y:
            v = math.log10(v)
        return HEIGHT - MARGIN - (v - lo) / (hi - lo) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="20" text-anchor="middle">{title}</text>',
           f'<path d="M{MARGIN},{MARGIN} V{HEIGHT - MARGIN} H{WIDTH - MARGIN}" '
           'stroke="black" fill="none"/>',
           f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle">{xlabel}</text>',
           f'<text x="14" y="{HEIGHT / 2}" transform="rotate(-90 14 {HEIGHT / 2})" '
           f'text-anchor="middle">{ylabel}</text>']
    for v in np.linspace(x0, x1, 5):
        out.append(f'<text x="{px(v):.1f}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle">{v:.3g}</text>')
    for v in np.linspace(lo, hi, 5):
        label = f"{10 ** v:.2g}" if log_y else f"{v:.3g}"
        yy = HEIGHT - MARGIN - (v - lo) / (hi - lo) * ph
        out.append(f'<text x="{MARGIN - 4}" y="{yy + 4:.1f}" text-anchor="end">{label}</text>')
    for i, (name, y) in enumerate(ys.items()):
        color = COLORS[i % len(COLORS)]
        pts = [(px(a), py(b)) for a, b in zip(x, y) if math.isfinite(b) and (b > 0 or not log_y)]
        if pts:
            d = "M" + " L".join(f"{a:.2f},{b:.2f}" for a, b in pts)
            out.append(f'<path d="{d}" stroke="{color}" stroke-width="1.5" fill="none"/>')
        out.append(f'<text x="{WIDTH - MARGIN - 4}" y="{MARGIN + 14 * (i + 1)}" '
                   f'text-anchor="end" fill="{color}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot_data(report, stem, svg: bool = True) -> list[Path]:
    """Write ``<stem>.dat`` and optionally ``<stem>.svg``; returns the paths written.

    An empty report writes nothing and warns.
    """
    stem = Path(stem)
    if isinstance(report, RateReport):
        if not report.t_grid:
            warnings.warn("empty rate report, no plot data written")
            return []
        table = _report_table(report)
        # the Berry-Esseen curve is the informative one; the general bound
        # stands in only when the law lacks a third moment
        name, bound = "Berry-Esseen bound", report.bound_curve
        if not any(math.isfinite(b) for b in bound) and report.bound_general:
            name, bound = "general bound", report.bound_general
        chart = svg_chart(report.t_grid, {"distance": report.distances, name: bound},
                          log_y=True, title=f"Kolmogorov distance, {report.law}",
                          ylabel="distance")
    elif isinstance(report, CharGrid):
        if report.n_points == 0:
            warnings.warn("empty grid, no plot data written")
            return []
        table = _grid_table(report)
        chart = svg_chart(report.xi, {"Re": report.values.real, "Im": report.values.imag},
                          title="characteristic function", xlabel="xi")
    else:
        raise TypeError(f"cannot plot {type(report).__name__}")
    written = [Path(f"{stem}.dat")]
    atomic_write(written[0], table)
    if svg:
        written.append(Path(f"{stem}.svg"))
        atomic_write(written[1], chart)
    return written
