"""Minimal SVG 1.1 line charts with no plotting dependency."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf", "#7f7f7f"]

WIDTH, HEIGHT = 900, 500
LEFT, RIGHT, TOP, BOTTOM = 80, 200, 50, 60


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10 ** math.floor(math.log10(raw))
    step = next(s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    k = 0
    while first + k * step <= hi + 1e-9 * step:
        ticks.append(first + k * step)
        k += 1
    return ticks


def _label(v: float) -> str:
    return f"{v:.6g}" if v != 0 else "0"


def line_chart(
    title: str,
    x_label: str,
    y_label: str,
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    hlines: Sequence[tuple[str, float]] = (),
) -> str:
    """Render series of (label, xs, ys) plus labelled horizontal reference lines.

    Non-finite samples break the polyline rather than distorting the axes.
    """
    xs_all = [x for _, xs, _ in series for x in xs if math.isfinite(x)]
    ys_all = [y for _, _, ys in series for y in ys if math.isfinite(y)]
    ys_all += [y for _, y in hlines if math.isfinite(y)]
    x_lo, x_hi = (min(xs_all), max(xs_all)) if xs_all else (0.0, 1.0)
    y_lo, y_hi = (min(ys_all), max(ys_all)) if ys_all else (0.0, 1.0)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    pad = 0.05 * (y_hi - y_lo) if y_hi > y_lo else 0.5
    y_lo, y_hi = y_lo - pad, y_hi + pad

    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x: float) -> float:
        return LEFT + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y: float) -> float:
        return TOP + ph - (y - y_lo) / (y_hi - y_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{LEFT + pw / 2:.2f}" y="28" text-anchor="middle" font-size="16">{escape(title)}</text>',
    ]
    for tx in nice_ticks(x_lo, x_hi):
        X = px(tx)
        out.append(f'<line x1="{X:.2f}" y1="{TOP}" x2="{X:.2f}" y2="{TOP + ph}" stroke="#eeeeee"/>')
        out.append(f'<text x="{X:.2f}" y="{TOP + ph + 18}" text-anchor="middle" font-size="11">{_label(tx)}</text>')
    for ty in nice_ticks(y_lo, y_hi):
        Y = py(ty)
        out.append(f'<line x1="{LEFT}" y1="{Y:.2f}" x2="{LEFT + pw}" y2="{Y:.2f}" stroke="#eeeeee"/>')
        out.append(f'<text x="{LEFT - 6}" y="{Y + 4:.2f}" text-anchor="end" font-size="11">{_label(ty)}</text>')
    out.append(f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    out.append(f'<text class="x-label" x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 15}" text-anchor="middle" font-size="13">{escape(x_label)}</text>')
    out.append(
        f'<text class="y-label" x="20" y="{TOP + ph / 2:.2f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 20 {TOP + ph / 2:.2f})">{escape(y_label)}</text>'
    )

    legend = []
    for i, (label, y) in enumerate(hlines):
        if not math.isfinite(y):
            continue
        Y = py(y)
        out.append(
            f'<line class="hline" x1="{LEFT}" y1="{Y:.2f}" x2="{LEFT + pw}" y2="{Y:.2f}" '
            f'stroke="black" stroke-dasharray="6,4"/>'
        )
        legend.append((label, "black", "6,4"))
    for i, (label, xs, ys) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        runs, current = [], []
        for x, y in zip(xs, ys):
            if math.isfinite(x) and math.isfinite(y):
                current.append(f"{px(x):.2f},{py(y):.2f}")
            elif current:
                runs.append(current)
                current = []
        if current:
            runs.append(current)
        for pts in runs:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(pts)}"/>')
        legend.append((label, color, None))

    lx = LEFT + pw + 15
    out.append(f'<g class="legend" font-size="12">')
    for i, (label, color, dash) in enumerate(legend):
        ly = TOP + 10 + 20 * i
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 25}" y2="{ly}" stroke="{color}" stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="{lx + 32}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_chart(path: str | Path, *args, **kwargs) -> Path:
    path = Path(path)
    path.write_text(line_chart(*args, **kwargs))
    return path
