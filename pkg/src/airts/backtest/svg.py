"""Forecast plot as a standalone SVG (hand-written, byte-deterministic)."""

from __future__ import annotations

import textwrap
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from ..autodiff.tensor import ContractError

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2")
WIDTH, HEIGHT = 720, 420
PLOT = (60, 20, 520, 300)   # x, y, w, h


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def forecast_svg(lookback: Sequence[float], truth: Sequence[float], forecasts: Mapping[str, Sequence[float]],
                 origin: str = "", annotation: str = "", title: str = "") -> str:
    lookback = np.asarray(lookback, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if lookback.size == 0 or truth.size == 0:
        raise ContractError("cannot plot an empty series")
    for name, f in forecasts.items():
        if len(f) != truth.size:
            raise ContractError(f"forecast {name!r} has {len(f)} points, truth has {truth.size}")
    fc = {k: np.asarray(v, dtype=float) for k, v in forecasts.items()}
    allv = np.concatenate([lookback, truth] + list(fc.values()))
    lo, hi = float(allv.min()), float(allv.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    n_total = lookback.size + truth.size
    x0, y0, w, h = PLOT

    def px(i):
        return x0 + w * i / max(n_total - 1, 1)

    def py(v):
        return y0 + h * (hi - v) / (hi - lo)

    def polyline(xs, vs, colour, dash=""):
        pts = " ".join(f"{_fmt(px(i))},{_fmt(py(v))}" for i, v in zip(xs, vs))
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        return f'<polyline fill="none" stroke="{colour}" stroke-width="1.5"{extra} points="{pts}"/>'

    T = lookback.size
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<text x="{x0}" y="14" font-family="sans-serif" font-size="12">{escape(title)}</text>',
        f'<rect x="{x0}" y="{y0}" width="{w}" height="{h}" fill="none" stroke="#999"/>',
        f'<line x1="{_fmt(px(T - 0.5))}" y1="{y0}" x2="{_fmt(px(T - 0.5))}" y2="{y0 + h}" stroke="#bbb" '
        f'stroke-dasharray="3,3"/>',
        f'<text x="{_fmt(px(T - 0.5) + 4)}" y="{y0 + 12}" font-family="sans-serif" font-size="10">'
        f'origin {escape(origin)}</text>',
        f'<text x="4" y="{_fmt(py(hi) + 4)}" font-family="sans-serif" font-size="10">{hi:.3g}</text>',
        f'<text x="4" y="{_fmt(py(lo))}" font-family="sans-serif" font-size="10">{lo:.3g}</text>',
        polyline(range(T), lookback, "#000"),
        polyline(range(T, n_total), truth, "#000", dash="4,2"),
    ]
    legend = [("lookback", "#000", ""), ("truth", "#000", "4,2")]
    for k, (name, vals) in enumerate(fc.items()):
        colour = PALETTE[k % len(PALETTE)]
        out.append(polyline(range(T, n_total), vals, colour))
        legend.append((name, colour, ""))
    lx = x0 + w + 15
    for k, (name, colour, dash) in enumerate(legend):
        y = y0 + 10 + 18 * k
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 20}" y2="{y}" stroke="{colour}" stroke-width="2"{extra}/>')
        out.append(f'<text x="{lx + 25}" y="{y + 4}" font-family="sans-serif" font-size="11">{escape(name)}</text>')
    if annotation:
        out.append(f'<rect x="{x0}" y="{y0 + h + 15}" width="{w}" height="{HEIGHT - y0 - h - 25}" '
                   f'fill="#f7f7f7" stroke="#ddd"/>')
        for k, line in enumerate(textwrap.wrap(annotation, 95)[:5]):
            out.append(f'<text x="{x0 + 6}" y="{y0 + h + 32 + 15 * k}" font-family="sans-serif" '
                       f'font-size="11">{escape(line)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_forecast_svg(path, lookback, truth, forecasts, origin: str = "", annotation: str = "",
                      title: str = "") -> Path:
    path = Path(path)
    path.write_text(forecast_svg(lookback, truth, forecasts, origin, annotation, title), encoding="utf-8")
    return path
