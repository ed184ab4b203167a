"""Dependency-light SVG line plots: polylines over a log-scaled error axis.

Only what the benchmark figures need -- axes, log ticks, one polyline per
method and a text legend. Not a general plotting library.
"""

from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
            "#17becf", "#7f7f7f")

_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 20, 50


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def write_line_plot(path, series, x_label: str, y_label: str = "rse") -> None:
    """Write polylines with a linear x axis and log10 y axis.

    ``series`` is a list of (label, xs, ys); y values must be positive and
    are plotted on a log scale.
    """
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if y > 0.0]
    if not pts:
        raise ValueError("nothing to plot: no positive y values")
    x_min = min(p[0] for p in pts)
    x_max = max(p[0] for p in pts)
    y_lo = math.floor(math.log10(min(p[1] for p in pts)))
    y_hi = math.ceil(math.log10(max(p[1] for p in pts)))
    if x_max <= x_min:
        x_max = x_min + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1

    def sx(x):
        return _ML + (x - x_min) / (x_max - x_min) * (_W - _ML - _MR)

    def sy(y):
        t = (math.log10(y) - y_lo) / (y_hi - y_lo)
        return _H - _MB - t * (_H - _MT - _MB)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
           f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
           f'<rect width="{_W}" height="{_H}" fill="white"/>',
           f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="black"/>',
           f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="black"/>']
    # y ticks: one per decade (thinned to at most ~8 labels)
    step = max(1, (y_hi - y_lo) // 8)
    for e in range(y_lo, y_hi + 1, step):
        y = sy(10.0**e)
        out.append(f'<line x1="{_ML - 4}" y1="{y:.1f}" x2="{_ML}" y2="{y:.1f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 8}" y="{y + 4:.1f}" text-anchor="end">1e{e}</text>')
    for i in range(5):
        x = x_min + (x_max - x_min) * i / 4
        px = sx(x)
        out.append(f'<line x1="{px:.1f}" y1="{_H - _MB}" x2="{px:.1f}" y2="{_H - _MB + 4}" '
                   'stroke="black"/>')
        out.append(f'<text x="{px:.1f}" y="{_H - _MB + 18}" text-anchor="middle">{_fmt(x)}</text>')
    out.append(f'<text x="{(_ML + _W - _MR) / 2:.1f}" y="{_H - 12}" '
               f'text-anchor="middle">{x_label}</text>')
    out.append(f'<text x="16" y="{(_MT + _H - _MB) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(_MT + _H - _MB) / 2:.1f})">{y_label}</text>')
    for idx, (label, xs, ys) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if y > 0.0)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{coords}"/>')
        ly = _MT + 16 + 16 * idx
        out.append(f'<line x1="{_W - 150}" y1="{ly - 4}" x2="{_W - 126}" y2="{ly - 4}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - 120}" y="{ly}">{label}</text>')
    out.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(out) + "\n")
