"""Minimal deterministic SVG scatter plots.

Output bytes depend only on the inputs: coordinates are printed with a fixed
number of decimals and no timestamps or random ids are emitted.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["WIDTH", "HEIGHT", "nice_ticks", "scatter_svg", "strip_svg", "write_svg"]

WIDTH = 800
HEIGHT = 600
_MARGIN = dict(left=80, right=110, top=50, bottom=60)

# viridis sampled at 9 stops; interpolated linearly
_CMAP = np.array([
    [68, 1, 84], [71, 44, 122], [59, 81, 139], [44, 113, 142], [33, 144, 141],
    [39, 173, 129], [92, 200, 99], [170, 220, 50], [253, 231, 37],
], dtype=float)

_CATEGORICAL = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"]


def _colormap(u: float) -> str:
    u = min(max(u, 0.0), 1.0) * (len(_CMAP) - 1)
    lo = int(math.floor(u))
    hi = min(lo + 1, len(_CMAP) - 1)
    rgb = _CMAP[lo] + (u - lo) * (_CMAP[hi] - _CMAP[lo])
    return "#%02x%02x%02x" % tuple(int(round(c)) for c in rgb)


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions covering ``[lo, hi]`` with steps of 1, 2 or 5 times a power of ten."""
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError("tick range must be finite")
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t = start + len(ticks) * step
    return ticks


def _fmt_tick(t: float) -> str:
    s = f"{t:.6g}"
    return "0" if s in ("-0", "0") else s


def _padded(v):
    lo, hi = float(np.min(v)), float(np.max(v))
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.04 * (hi - lo)
    return lo - pad, hi + pad


def _frame(x, y, title, xlabel, ylabel, show_y=True):
    """Header, axes and the coordinate transforms shared by all plots."""
    ml, mr, mt, mb = _MARGIN["left"], _MARGIN["right"], _MARGIN["top"], _MARGIN["bottom"]
    pw, ph = WIDTH - ml - mr, HEIGHT - mt - mb
    x0, x1 = _padded(x)
    y0, y1 = _padded(y)

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#000000"/>',
    ]
    for t in nice_ticks(x0, x1):
        if x0 <= t <= x1:
            px = sx(t)
            out.append(f'<line x1="{px:.2f}" y1="{mt + ph}" x2="{px:.2f}" y2="{mt + ph + 5}" stroke="#000000"/>')
            out.append(f'<text x="{px:.2f}" y="{mt + ph + 19}" text-anchor="middle">{_fmt_tick(t)}</text>')
    if show_y:
        for t in nice_ticks(y0, y1):
            if y0 <= t <= y1:
                py = sy(t)
                out.append(f'<line x1="{ml - 5}" y1="{py:.2f}" x2="{ml}" y2="{py:.2f}" stroke="#000000"/>')
                out.append(f'<text x="{ml - 8}" y="{py + 4:.2f}" text-anchor="end">{_fmt_tick(t)}</text>')
    out.append(f'<text x="{ml + pw / 2:.2f}" y="{mt - 18}" text-anchor="middle" font-size="15">{escape(title)}</text>')
    out.append(f'<text x="{ml + pw / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        cy = mt + ph / 2
        out.append(f'<text x="20" y="{cy:.2f}" text-anchor="middle" '
                   f'transform="rotate(-90 20 {cy:.2f})">{escape(ylabel)}</text>')
    return out, sx, sy


def _colors(n, values, labels):
    if labels is not None:
        labels = np.asarray(labels)
        classes = sorted(set(labels.tolist()))
        lookup = {c: _CATEGORICAL[j % len(_CATEGORICAL)] for j, c in enumerate(classes)}
        return [lookup[c] for c in labels.tolist()], ("labels", classes, lookup)
    if values is not None:
        values = np.asarray(values, dtype=float).ravel()
        lo, hi = float(values.min()), float(values.max())
        span = hi - lo if hi > lo else 1.0
        return [_colormap((v - lo) / span) for v in values], ("values", lo, hi)
    return ["#1f77b4"] * n, None


def _legend(out, legend, title):
    if legend is None:
        return
    lx = WIDTH - _MARGIN["right"] + 20
    top = _MARGIN["top"]
    if legend[0] == "labels":
        _, classes, lookup = legend
        for j, c in enumerate(classes):
            y = top + 20 * j
            out.append(f'<circle cx="{lx + 5}" cy="{y + 5}" r="5" fill="{lookup[c]}"/>')
            out.append(f'<text x="{lx + 16}" y="{y + 9}">{escape(str(c))}</text>')
        return
    _, lo, hi = legend
    h = HEIGHT - _MARGIN["top"] - _MARGIN["bottom"]
    steps = 32
    for j in range(steps):
        y = top + h * (steps - 1 - j) / steps
        out.append(f'<rect x="{lx}" y="{y:.2f}" width="16" height="{h / steps + 0.5:.2f}" '
                   f'fill="{_colormap(j / (steps - 1))}"/>')
    out.append(f'<text x="{lx + 20}" y="{top + 10}">{_fmt_tick(hi)}</text>')
    out.append(f'<text x="{lx + 20}" y="{top + h}">{_fmt_tick(lo)}</text>')
    if title:
        out.append(f'<text x="{lx}" y="{top - 8}">{escape(title)}</text>')


def scatter_svg(x, y, values=None, labels=None, title="", xlabel="", ylabel="",
                color_title="", radius=2.5) -> str:
    """Scatter plot of ``(x, y)`` colored by a scalar ``values`` or by integer ``labels``."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size == 0 or x.size != y.size:
        raise ValueError(f"need equally sized non-empty coordinates, got {x.size} and {y.size}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("coordinates must be finite")
    out, sx, sy = _frame(x, y, title, xlabel, ylabel)
    colors, legend = _colors(x.size, values, labels)
    for xi, yi, c in zip(x, y, colors):
        out.append(f'<circle cx="{sx(xi):.2f}" cy="{sy(yi):.2f}" r="{radius}" fill="{c}"/>')
    _legend(out, legend, color_title)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def strip_svg(t, labels=None, values=None, title="", xlabel="") -> str:
    """One-dimensional coordinates drawn as a strip, one row per class when labelled."""
    t = np.asarray(t, dtype=float).ravel()
    if t.size == 0:
        raise ValueError("nothing to plot")
    if labels is not None:
        labels = np.asarray(labels)
        classes = sorted(set(labels.tolist()))
        row = np.array([classes.index(c) for c in labels.tolist()], dtype=float)
    else:
        row = np.zeros(t.size)
    out, sx, sy = _frame(t, np.r_[row, -0.5, row.max() + 0.5], title, xlabel, "", show_y=False)
    colors, legend = _colors(t.size, values, labels)
    for ti, ri, c in zip(t, row, colors):
        py = sy(ri)
        out.append(f'<line x1="{sx(ti):.2f}" y1="{py - 12:.2f}" x2="{sx(ti):.2f}" '
                   f'y2="{py + 12:.2f}" stroke="{c}" stroke-width="1"/>')
    _legend(out, legend, "")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, svg: str) -> None:
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(svg)
