"""Minimal deterministic SVG line plots for run outputs.

No plotting dependency: the emitter writes fixed-size SVG documents with a
fixed float format, so identical inputs give identical bytes.  These plots
are diagnostic aids, not publication graphics.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ContractError

WIDTH, HEIGHT = 720, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 36, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, log: bool) -> list[float]:
    if log:
        lo_e = math.floor(math.log10(lo))
        hi_e = math.ceil(math.log10(hi))
        return [10.0**e for e in range(int(lo_e), int(hi_e) + 1)]
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10.0 ** math.floor(math.log10(span / 4.0))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if span / (step * mult) <= 6.0:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(t)
        t += step
    return ticks


class _Axis:
    def __init__(self, lo: float, hi: float, pixel_lo: float, pixel_hi: float, log: bool):
        if log:
            lo = max(lo, 1e-300)
            hi = max(hi, lo * 10.0)
        elif hi <= lo:
            hi = lo + 1.0
        self.lo, self.hi, self.log = lo, hi, log
        self.pixel_lo, self.pixel_hi = pixel_lo, pixel_hi

    def to_pixel(self, x: np.ndarray) -> np.ndarray:
        if self.log:
            x = np.clip(x, self.lo, None)
            t = (np.log10(x) - math.log10(self.lo)) / (
                math.log10(self.hi) - math.log10(self.lo)
            )
        else:
            t = (x - self.lo) / (self.hi - self.lo)
        return self.pixel_lo + t * (self.pixel_hi - self.pixel_lo)


def line_plot_svg(
    x: np.ndarray,
    series: list[tuple[str, np.ndarray]],
    title: str,
    xlabel: str,
    ylabel: str,
    log_x: bool = False,
    log_y: bool = False,
) -> str:
    """Render one SVG panel with a shared x axis and labelled polylines."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0 or not series:
        raise ContractError("cannot plot an empty series")
    ys = [np.asarray(y, dtype=np.float64) for _, y in series]
    for y in ys:
        if y.shape != x.shape:
            raise ContractError("series length does not match the x axis")

    def finite_positive(arr: np.ndarray, need_positive: bool) -> np.ndarray:
        keep = np.isfinite(arr)
        if need_positive:
            keep &= arr > 0.0
        return arr[keep]

    x_data = finite_positive(x, log_x)
    y_data = np.concatenate([finite_positive(y, log_y) for y in ys]) if ys else x
    if x_data.size == 0 or y_data.size == 0:
        raise ContractError("no plottable finite data")
    ax = _Axis(float(np.min(x_data)), float(np.max(x_data)), MARGIN_L, WIDTH - MARGIN_R, log_x)
    ay = _Axis(float(np.min(y_data)), float(np.max(y_data)), HEIGHT - MARGIN_B, MARGIN_T, log_y)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" font-size="14" '
        f'font-family="monospace">{title}</text>',
    ]
    # frame
    parts.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="black"/>'
    )
    for t in _ticks(ax.lo, ax.hi, log_x):
        px = float(ax.to_pixel(np.asarray(t)))
        if px < MARGIN_L - 0.5 or px > WIDTH - MARGIN_R + 0.5:
            continue
        parts.append(
            f'<line x1="{_fmt(px)}" y1="{HEIGHT - MARGIN_B}" x2="{_fmt(px)}" '
            f'y2="{HEIGHT - MARGIN_B + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle" '
            f'font-size="10" font-family="monospace">{_fmt(t)}</text>'
        )
    for t in _ticks(ay.lo, ay.hi, log_y):
        py = float(ay.to_pixel(np.asarray(t)))
        if py < MARGIN_T - 0.5 or py > HEIGHT - MARGIN_B + 0.5:
            continue
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{_fmt(py)}" x2="{MARGIN_L}" y2="{_fmt(py)}" '
            f'stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{_fmt(py + 3)}" text-anchor="end" '
            f'font-size="10" font-family="monospace">{_fmt(t)}</text>'
        )
    parts.append(
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12" '
        f'font-family="monospace">{xlabel}</text>'
    )
    parts.append(
        f'<text x="16" y="{HEIGHT // 2}" text-anchor="middle" font-size="12" '
        f'font-family="monospace" transform="rotate(-90 16 {HEIGHT // 2})">{ylabel}</text>'
    )

    for idx, (label, y) in enumerate(series):
        color = PALETTE[idx % len(PALETTE)]
        keep = np.isfinite(y)
        if log_y:
            keep &= y > 0.0
        if log_x:
            keep &= x > 0.0
        xs = ax.to_pixel(x[keep])
        ys_px = ay.to_pixel(y[keep])
        points = " ".join(f"{_fmt(float(a))},{_fmt(float(b))}" for a, b in zip(xs, ys_px))
        if points:
            parts.append(
                f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{points}"/>'
            )
        parts.append(
            f'<text x="{WIDTH - MARGIN_R - 6}" y="{MARGIN_T + 16 + 14 * idx}" '
            f'text-anchor="end" font-size="11" font-family="monospace" '
            f'fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
