"""Minimal self-contained SVG line charts for trajectory figures.

Plain polyline rendering with a framed plot area, 1-2-5 tick spacing, and a
small legend.  Long series are decimated by a uniform stride so the files
stay a reasonable size.
"""

from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .simulate import Trajectory

__all__ = ["render_line_chart", "trajectory_figures", "write_trajectory_figures"]

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")

_WIDTH, _HEIGHT = 880, 520
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 72, 24, 44, 56


def _nice_ticks(lo: float, hi: float, target: int = 6) -> "list[float]":
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mult * mag
        if raw <= step:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    v = first
    while v <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(v) < 1e-12 * span else v)
        v += step
    return ticks


def _decimate(values: np.ndarray, max_points: int) -> np.ndarray:
    if values.size <= max_points:
        return values
    stride = int(math.ceil(values.size / max_points))
    out = values[::stride]
    if (values.size - 1) % stride:
        out = np.append(out, values[-1])
    return out


def render_line_chart(
    path: "str | Path",
    title: str,
    x_label: str,
    y_label: str,
    series: "list[tuple[str, np.ndarray, np.ndarray]]",
    max_points: int = 4000,
) -> None:
    """Write one chart; ``series`` holds (label, x, y) triples."""
    xs = [_decimate(np.asarray(x, dtype=float), max_points) for _, x, _ in series]
    ys = [_decimate(np.asarray(y, dtype=float), max_points) for _, _, y in series]
    x_lo = min(float(np.min(x)) for x in xs)
    x_hi = max(float(np.max(x)) for x in xs)
    y_lo = min(float(np.min(y)) for y in ys)
    y_hi = max(float(np.max(y)) for y in ys)
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo -= pad
    y_hi += pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(v: float) -> float:
        return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v: float) -> float:
        return _MARGIN_T + (y_hi - v) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="24" font-family="sans-serif" font-size="16" '
        f'text-anchor="middle">{escape(title)}</text>',
    ]
    for tick in _nice_ticks(x_lo, x_hi):
        x = px(tick)
        parts.append(
            f'<line x1="{x:.2f}" y1="{_MARGIN_T}" x2="{x:.2f}" '
            f'y2="{_MARGIN_T + plot_h}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{_MARGIN_T + plot_h + 18}" font-family="sans-serif" '
            f'font-size="11" text-anchor="middle">{tick:.6g}</text>'
        )
    for tick in _nice_ticks(y_lo, y_hi):
        y = py(tick)
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{y:.2f}" x2="{_MARGIN_L + plot_w}" '
            f'y2="{y:.2f}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8}" y="{y + 4:.2f}" font-family="sans-serif" '
            f'font-size="11" text-anchor="end">{tick:.6g}</text>'
        )
    parts.append(
        f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333333" stroke-width="1"/>'
    )
    for idx, (label, _, _) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        points = " ".join(
            f"{px(xv):.2f},{py(yv):.2f}" for xv, yv in zip(xs[idx], ys[idx])
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="1.2"/>'
        )
        ly = _MARGIN_T + 16 + 16 * idx
        lx = _MARGIN_L + plot_w - 150
        parts.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{escape(label)}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_L + plot_w / 2:.1f}" y="{_HEIGHT - 14}" '
        f'font-family="sans-serif" font-size="13" text-anchor="middle">'
        f"{escape(x_label)}</text>"
    )
    parts.append(
        f'<text x="20" y="{_MARGIN_T + plot_h / 2:.1f}" font-family="sans-serif" '
        f'font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 20 {_MARGIN_T + plot_h / 2:.1f})">'
        f"{escape(y_label)}</text>"
    )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def trajectory_figures(traj: Trajectory) -> "list[tuple[str, str, list]]":
    """(filename, title, series) for every figure a run produces.

    One estimate figure and one error figure per state, then the same pair
    for the fault signal: 2n + 2 figures in total.
    """
    figures = []
    num = 1
    for i in range(traj.n):
        figures.append(
            (
                f"fig{num}_state{i + 1}_estimate.svg",
                f"State x{i + 1} and its estimate",
                [
                    (f"x{i + 1}", traj.t, traj.x[:, i]),
                    (f"xhat{i + 1}", traj.t, traj.xhat[:, i]),
                ],
            )
        )
        num += 1
        figures.append(
            (
                f"fig{num}_state{i + 1}_error.svg",
                f"Estimation error e{i + 1}",
                [(f"e{i + 1}", traj.t, traj.e[:, i])],
            )
        )
        num += 1
    figures.append(
        (
            f"fig{num}_fault_estimate.svg",
            "Fault signal and its estimate",
            [("f", traj.t, traj.fault), ("fhat", traj.t, traj.fhat)],
        )
    )
    num += 1
    figures.append(
        (
            f"fig{num}_fault_error.svg",
            "Fault estimation error",
            [("f - fhat", traj.t, traj.fault - traj.fhat)],
        )
    )
    return figures


def write_trajectory_figures(traj: Trajectory, directory: "str | Path") -> "list[Path]":
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for filename, title, series in trajectory_figures(traj):
        target = out_dir / filename
        render_line_chart(target, title, "t [s]", "value", series)
        written.append(target)
    return written
