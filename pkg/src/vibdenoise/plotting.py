"""Deterministic SVG line plots of signal traces (no plotting backend needed)."""

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _fmt(v):
    return f"{v:.2f}"


def svg_line_plot(x, series: dict, title="", width=900, height=360) -> str:
    """Render ``{label: y-array}`` against ``x`` as a standalone SVG document."""
    x = np.asarray(x, dtype=np.float64)
    margin_l, margin_r, margin_t, margin_b = 60, 160, 30, 40
    plot_w, plot_h = width - margin_l - margin_r, height - margin_t - margin_b
    ys = [np.asarray(y, dtype=np.float64) for y in series.values()]
    y_lo = min(float(y.min()) for y in ys) if ys else -1.0
    y_hi = max(float(y.max()) for y in ys) if ys else 1.0
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1, y_hi + 1
    x_lo, x_hi = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1

    def px(v):
        return margin_l + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v):
        return margin_t + (y_hi - v) / (y_hi - y_lo) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" height="{plot_h}" '
        'fill="none" stroke="black" stroke-width="1"/>',
        f'<text x="{margin_l}" y="{margin_t - 10}" font-family="sans-serif" font-size="14">{escape(title)}</text>',
        f'<text x="{margin_l}" y="{height - 10}" font-family="sans-serif" font-size="11">{_fmt(x_lo)}</text>',
        f'<text x="{margin_l + plot_w}" y="{height - 10}" font-family="sans-serif" font-size="11" '
        f'text-anchor="end">{_fmt(x_hi)}</text>',
        f'<text x="{margin_l - 5}" y="{margin_t + 10}" font-family="sans-serif" font-size="11" '
        f'text-anchor="end">{_fmt(y_hi)}</text>',
        f'<text x="{margin_l - 5}" y="{margin_t + plot_h}" font-family="sans-serif" font-size="11" '
        f'text-anchor="end">{_fmt(y_lo)}</text>',
    ]
    for k, (label, y) in enumerate(zip(series, ys)):
        colour = PALETTE[k % len(PALETTE)]
        points = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x, y))
        out.append(f'<polyline class="series" fill="none" stroke="{colour}" stroke-width="1" points="{points}"/>')
    out.append('<g class="legend">')
    for k, label in enumerate(series):
        colour = PALETTE[k % len(PALETTE)]
        ly = margin_t + 10 + 18 * k
        lx = margin_l + plot_w + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-family="sans-serif" font-size="12">{escape(label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
