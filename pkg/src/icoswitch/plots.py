"""Deterministic SVG renderings of fringe scans and witness sweeps.

All coordinates are written with fixed decimal formatting into a fixed
viewBox, so rendered files are byte-stable and diffable as goldens.
"""

from __future__ import annotations

import numpy as np

WIDTH, HEIGHT = 640.0, 400.0
MARGIN = 56.0


def _fmt(x):
    return f"{x:.6f}"


def _map(vals, lo, hi, out_lo, out_hi):
    vals = np.asarray(vals, dtype=float)
    if hi == lo:
        return np.full(vals.shape, (out_lo + out_hi) / 2.0)
    return out_lo + (vals - lo) * (out_hi - out_lo) / (hi - lo)


def _frame(title, xlabel, ylabel):
    x0, x1 = MARGIN, WIDTH - MARGIN
    y0, y1 = HEIGHT - MARGIN, MARGIN
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_fmt(WIDTH)} {_fmt(HEIGHT)}">',
        f'<rect x="0" y="0" width="{_fmt(WIDTH)}" height="{_fmt(HEIGHT)}" fill="white"/>',
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y0)}" stroke="black" stroke-width="1"/>',
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0)}" y2="{_fmt(y1)}" stroke="black" stroke-width="1"/>',
        f'<text x="{_fmt(WIDTH / 2)}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{_fmt(WIDTH / 2)}" y="{_fmt(HEIGHT - 12)}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{_fmt(HEIGHT / 2)}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {_fmt(HEIGHT / 2)})">{ylabel}</text>',
    ]


def _polyline(xs, ys, color):
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in zip(xs, ys))
    return (f'<polyline points="{pts}" fill="none" stroke="{color}" '
            f'stroke-width="1.5"/>')


def fringe_svg(phases, rates, visibility) -> str:
    """Coincidence rate against interferometer phase (radians)."""
    phases = np.asarray(phases, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if phases.size == 0:
        raise ValueError("empty fringe scan")
    x0, x1 = MARGIN, WIDTH - MARGIN
    y0, y1 = HEIGHT - MARGIN, MARGIN
    hi = max(rates.max(), 1e-12)
    xs = _map(phases, phases.min(), phases.max(), x0, x1)
    ys = _map(rates, 0.0, hi, y0, y1)
    parts = _frame(f"interference fringe, V = {visibility:.4f}",
                   "phase (rad)", "coincidence probability")
    parts.append(_polyline(xs, ys, "#1f6fb2"))
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.2" '
                     f'fill="#1f6fb2"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def sweep_svg(d_grid, values, reference=None) -> str:
    """Witness value against distinguishability, with the zero line.

    ``reference`` optionally marks an externally reported (D, value)
    point for qualitative comparison.
    """
    d_grid = np.asarray(d_grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if d_grid.size == 0:
        raise ValueError("empty sweep")
    x0, x1 = MARGIN, WIDTH - MARGIN
    y0, y1 = HEIGHT - MARGIN, MARGIN
    lo = min(values.min(), -0.05)
    hi = max(values.max(), 0.05)
    xs = _map(d_grid, 0.0, 1.0, x0, x1)
    ys = _map(values, lo, hi, y0, y1)
    zero_y = float(_map(np.array([0.0]), lo, hi, y0, y1)[0])
    parts = _frame("causal witness against which-path distinguishability",
                   "distinguishability D", "witness value")
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(zero_y)}" x2="{_fmt(x1)}" '
                 f'y2="{_fmt(zero_y)}" stroke="#999999" stroke-width="1" '
                 f'stroke-dasharray="4,3"/>')
    parts.append(_polyline(xs, ys, "#b23a1f"))
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.6" '
                     f'fill="#b23a1f"/>')
    if reference is not None:
        rx = float(_map(np.array([reference[0]]), 0.0, 1.0, x0, x1)[0])
        ry = float(_map(np.array([reference[1]]), lo, hi, y0, y1)[0])
        parts.append(f'<circle cx="{_fmt(rx)}" cy="{_fmt(ry)}" r="4.0" '
                     f'fill="none" stroke="#2a7d2a" stroke-width="1.5"/>')
        parts.append(f'<text x="{_fmt(rx + 8)}" y="{_fmt(ry - 6)}" '
                     f'font-size="11" fill="#2a7d2a">reported '
                     f'{reference[1]:.4f}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
