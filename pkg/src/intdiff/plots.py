"""Minimal deterministic SVG plotting (scatter and line charts).

Hand-rolled rather than delegating to a plotting library so identical
inputs produce byte-identical documents: fixed canvas, fixed palette,
fixed 4-decimal coordinate formatting.
"""

from __future__ import annotations

from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

WIDTH, HEIGHT = 640, 480
MARGIN = 56

PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
]


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _scale(values: np.ndarray, lo_px: float, hi_px: float) -> np.ndarray:
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        return np.full(values.shape, (lo_px + hi_px) / 2.0)
    return lo_px + (values - lo) / (hi - lo) * (hi_px - lo_px)


def _header(title: str = "") -> list:
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH // 2}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{title}</text>'
        )
    return parts


def svg_scatter(
    x: np.ndarray,
    y: np.ndarray,
    labels: Optional[np.ndarray] = None,
    title: str = "",
) -> str:
    """Scatter plot of (x, y); one circle per point, colored by label."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    px = _scale(x, MARGIN, WIDTH - MARGIN)
    py = _scale(y, HEIGHT - MARGIN, MARGIN)  # y grows upward
    parts = _header(title)
    if labels is None:
        colors = [PALETTE[0]] * len(x)
    else:
        labels = np.asarray(labels)
        distinct = sorted(set(int(v) for v in labels))
        color_of = {lab: PALETTE[i % len(PALETTE)] for i, lab in enumerate(distinct)}
        colors = [color_of[int(v)] for v in labels]
        for i, lab in enumerate(distinct):
            ly = MARGIN + 16 * i
            parts.append(
                f'<circle cx="{WIDTH - MARGIN + 14}" cy="{ly}" r="4" fill="{color_of[lab]}"/>'
            )
            parts.append(
                f'<text x="{WIDTH - MARGIN + 24}" y="{ly + 4}" '
                f'font-family="sans-serif" font-size="11">{lab}</text>'
            )
    for xi, yi, color in zip(px, py, colors):
        parts.append(f'<circle cx="{_fmt(xi)}" cy="{_fmt(yi)}" r="3" fill="{color}" fill-opacity="0.75"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def svg_line_plot(
    series: Mapping[str, Tuple[Sequence[float], Sequence[float]]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
) -> str:
    """Line chart with one polyline and one legend entry per named series."""
    all_x = np.concatenate([np.asarray(xs, dtype=np.float64) for xs, _ in series.values()])
    all_y = np.concatenate([np.asarray(ys, dtype=np.float64) for _, ys in series.values()])
    x_lo, x_hi = float(all_x.min()), float(all_x.max())
    y_lo, y_hi = float(all_y.min()), float(all_y.max())

    def sx(v):
        if x_hi == x_lo:
            return WIDTH / 2.0
        return MARGIN + (v - x_lo) / (x_hi - x_lo) * (WIDTH - 2 * MARGIN)

    def sy(v):
        if y_hi == y_lo:
            return HEIGHT / 2.0
        return HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - 2 * MARGIN)

    parts = _header(title)
    parts.append(
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>'
    )
    if x_label:
        parts.append(
            f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{x_label}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="12" transform="rotate(-90 16 {HEIGHT // 2})">{y_label}</text>'
        )
    for lo, hi, fixed, vertical in ((x_lo, x_hi, HEIGHT - MARGIN, False), (y_lo, y_hi, MARGIN, True)):
        for frac in (0.0, 0.5, 1.0):
            v = lo + frac * (hi - lo)
            if vertical:
                parts.append(
                    f'<text x="{MARGIN - 6}" y="{_fmt(sy(v) + 4)}" text-anchor="end" '
                    f'font-family="sans-serif" font-size="10">{v:.3g}</text>'
                )
            else:
                parts.append(
                    f'<text x="{_fmt(sx(v))}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" '
                    f'font-family="sans-serif" font-size="10">{v:.3g}</text>'
                )
    for i, (name, (xs, ys)) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{_fmt(sx(float(x)))},{_fmt(sy(float(y)))}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{points}"/>')
        ly = MARGIN + 16 * i
        parts.append(f'<line x1="{WIDTH - MARGIN - 120}" y1="{ly}" x2="{WIDTH - MARGIN - 96}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        parts.append(
            f'<text x="{WIDTH - MARGIN - 90}" y="{ly + 4}" font-family="sans-serif" '
            f'font-size="11">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
