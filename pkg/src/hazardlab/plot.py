"""Self-contained SVG step plots for survival and cumulative-hazard curves.

Output is deterministic: fixed canvas, fixed palette, fixed number
formatting, no timestamps, so identical inputs give identical bytes.  Next
to every SVG a CSV of the plotted points is written with the same stem.
"""

from __future__ import annotations

import os
from xml.sax.saxutils import escape

import numpy as np

from .data import ValidationError, format_number
from .nonparametric import HazardCurve, SurvivalCurve, cumulative_hazard

__all__ = ["emit_plot", "PLOT_STYLES"]

PLOT_STYLES = ("survival", "cumulative_hazard")

_WIDTH, _HEIGHT = 800.0, 500.0
_ML, _MR, _MT, _MB = 72.0, 24.0, 24.0, 56.0
_PALETTE = ("#1f6fb4", "#d62728", "#2c9a4b", "#9467bd", "#e07b1a", "#6b5b4f")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _tick_step(span: float, target: int = 5) -> float:
    raw = span / target
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if span / (mult * mag) <= target + 0.5:
            return mult * mag
    return 10.0 * mag


def _step_points(times, values, start_value, xmax):
    """Vertices of a post step path from t=0 to t=xmax."""
    pts = [(0.0, start_value)]
    prev = start_value
    for t, v in zip(times, values):
        pts.append((float(t), prev))
        pts.append((float(t), float(v)))
        prev = float(v)
    pts.append((xmax, prev))
    return pts


def _path(pts, x_of, y_of) -> str:
    head = f"M {_fmt(x_of(pts[0][0]))} {_fmt(y_of(pts[0][1]))}"
    segs = [head]
    for x, y in pts[1:]:
        segs.append(f"L {_fmt(x_of(x))} {_fmt(y_of(y))}")
    return " ".join(segs)


def emit_plot(curves, out_path, style: str = "survival"):
    """Render step curves to an SVG file plus a sibling CSV of the points.

    curves may be SurvivalCurve or HazardCurve objects; with
    style="cumulative_hazard" survival curves are transformed first.
    Returns (svg_path, csv_path).
    """
    if style not in PLOT_STYLES:
        raise ValidationError(f"style must be one of {PLOT_STYLES}, got {style!r}")
    curves = list(curves)
    if not curves:
        raise ValidationError("nothing to plot")

    if style == "survival":
        for c in curves:
            if not isinstance(c, SurvivalCurve):
                raise ValidationError("survival style needs survival curves")
        plotted = curves
        start_value = 1.0
        y_label = "survival probability"
        value_name = "survival"
    else:
        plotted = [cumulative_hazard(c) if isinstance(c, SurvivalCurve) else c for c in curves]
        start_value = 0.0
        y_label = "cumulative hazard"
        value_name = "cumulative_hazard"

    xmax = 0.0
    for c in plotted:
        xmax = max(xmax, c.max_time, float(c.times[-1]) if c.times.size else 0.0)
    if xmax <= 0:
        xmax = 1.0

    if style == "survival":
        ymax = 1.0
    else:
        finite = [
            float(v)
            for c in plotted
            for v in np.asarray(c.cumulative_hazard)[np.isfinite(c.cumulative_hazard)]
        ]
        ymax = max(finite) * 1.05 if finite and max(finite) > 0 else 1.0

    def x_of(t: float) -> float:
        return _ML + (t / xmax) * (_WIDTH - _ML - _MR)

    def y_of(v: float) -> float:
        v = min(v, ymax)
        return _MT + (1.0 - v / ymax) * (_HEIGHT - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(_WIDTH)}" '
        f'height="{int(_HEIGHT)}" viewBox="0 0 {int(_WIDTH)} {int(_HEIGHT)}">',
        f'<rect x="0" y="0" width="{int(_WIDTH)}" height="{int(_HEIGHT)}" fill="#ffffff"/>',
    ]

    # gridlines and ticks
    xstep = _tick_step(xmax)
    ystep = _tick_step(ymax)
    x_ticks = np.arange(0.0, xmax * (1 + 1e-9) + 1e-12, xstep)
    y_ticks = np.arange(0.0, ymax * (1 + 1e-9) + 1e-12, ystep)
    for t in x_ticks:
        px = x_of(float(t))
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{_fmt(y_of(0.0))}" x2="{_fmt(px)}" '
            f'y2="{_fmt(y_of(ymax))}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(_HEIGHT - _MB + 18)}" font-family="sans-serif" '
            f'font-size="12" fill="#333333" text-anchor="middle">{t:g}</text>'
        )
    for v in y_ticks:
        py = y_of(float(v))
        parts.append(
            f'<line x1="{_fmt(x_of(0.0))}" y1="{_fmt(py)}" x2="{_fmt(x_of(xmax))}" '
            f'y2="{_fmt(py)}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_fmt(_ML - 8)}" y="{_fmt(py + 4)}" font-family="sans-serif" '
            f'font-size="12" fill="#333333" text-anchor="end">{v:g}</text>'
        )

    # axes
    parts.append(
        f'<line x1="{_fmt(_ML)}" y1="{_fmt(_HEIGHT - _MB)}" x2="{_fmt(_WIDTH - _MR)}" '
        f'y2="{_fmt(_HEIGHT - _MB)}" stroke="#000000" stroke-width="1.5"/>'
    )
    parts.append(
        f'<line x1="{_fmt(_ML)}" y1="{_fmt(_MT)}" x2="{_fmt(_ML)}" '
        f'y2="{_fmt(_HEIGHT - _MB)}" stroke="#000000" stroke-width="1.5"/>'
    )
    parts.append(
        f'<text x="{_fmt((_ML + _WIDTH - _MR) / 2)}" y="{_fmt(_HEIGHT - 14)}" '
        f'font-family="sans-serif" font-size="14" fill="#000000" '
        f'text-anchor="middle">time [s]</text>'
    )
    parts.append(
        f'<text x="18" y="{_fmt((_MT + _HEIGHT - _MB) / 2)}" font-family="sans-serif" '
        f'font-size="14" fill="#000000" text-anchor="middle" '
        f'transform="rotate(-90 18 {_fmt((_MT + _HEIGHT - _MB) / 2)})">{escape(y_label)}</text>'
    )

    csv_lines = [f"label,t,{value_name},ci_lower,ci_upper"]
    labels = []
    for i, curve in enumerate(plotted):
        color = _PALETTE[i % len(_PALETTE)]
        label = curve.label or f"curve {i + 1}"
        labels.append((label, color))
        if style == "survival":
            values = curve.survival
            lower = curve.ci_lower
            upper = curve.ci_upper
            has_band = curve.times.size > 0 and (
                np.any(lower < values) or np.any(upper > values)
            )
            if has_band:
                up_pts = _step_points(curve.times[1:], upper[1:], float(upper[0]), xmax)
                up_pts = [(float(curve.times[0]), float(upper[0]))] + up_pts[1:]
                lo_pts = _step_points(curve.times[1:], lower[1:], float(lower[0]), xmax)
                lo_pts = [(float(curve.times[0]), float(lower[0]))] + lo_pts[1:]
                ring = up_pts + lo_pts[::-1]
                coords = " ".join(
                    f"{_fmt(x_of(x))},{_fmt(y_of(y))}" for x, y in ring
                )
                parts.append(
                    f'<polygon points="{coords}" fill="{color}" fill-opacity="0.15" '
                    f'stroke="none"/>'
                )
        else:
            values = curve.cumulative_hazard
            lower = upper = None
        draw_vals = np.minimum(np.asarray(values, dtype=float), ymax) if len(values) else values
        pts = _step_points(curve.times, draw_vals, start_value, xmax)
        parts.append(
            f'<path d="{_path(pts, x_of, y_of)}" fill="none" stroke="{color}" '
            f'stroke-width="2"/>'
        )
        for j in range(curve.times.size):
            row = [
                escape(label),
                format_number(curve.times[j]),
                format_number(values[j]),
                format_number(lower[j]) if lower is not None else "",
                format_number(upper[j]) if upper is not None else "",
            ]
            csv_lines.append(",".join(row))

    # legend, top right inside the axes
    lx = _WIDTH - _MR - 170.0
    ly = _MT + 12.0
    box_h = 20.0 * len(labels) + 10.0
    parts.append(
        f'<rect x="{_fmt(lx)}" y="{_fmt(ly)}" width="160" height="{_fmt(box_h)}" '
        f'fill="#ffffff" fill-opacity="0.85" stroke="#999999" stroke-width="1"/>'
    )
    for i, (label, color) in enumerate(labels):
        ey = ly + 15.0 + 20.0 * i
        parts.append(
            f'<line x1="{_fmt(lx + 10)}" y1="{_fmt(ey)}" x2="{_fmt(lx + 34)}" '
            f'y2="{_fmt(ey)}" stroke="{color}" stroke-width="3"/>'
        )
        parts.append(
            f'<text x="{_fmt(lx + 42)}" y="{_fmt(ey + 4)}" font-family="sans-serif" '
            f'font-size="12" fill="#000000">{escape(label)}</text>'
        )
    parts.append("</svg>")

    svg_path = os.fspath(out_path)
    stem, _ = os.path.splitext(svg_path)
    csv_path = stem + ".csv"
    with open(svg_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(csv_lines) + "\n")
    return svg_path, csv_path
