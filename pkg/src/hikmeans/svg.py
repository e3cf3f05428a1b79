"""Self-contained SVG figures. These are reading aids; CSVs carry the data."""

from __future__ import annotations

import math

import numpy as np

_W, _H = 560, 400
_ML, _MR, _MT, _MB = 64, 16, 36, 52
_PLOT_W, _PLOT_H = _W - _ML - _MR, _H - _MT - _MB


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    step = 10 ** math.floor(math.log10(span / n))
    for mult in (1, 2, 5, 10):
        if span / (step * mult) <= n:
            step *= mult
            break
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-12 * span:
        out.append(round(v, 12))
        v += step
    return out


class _Axes:
    def __init__(self, xlo, xhi, ylo, yhi):
        pad_x = 0.05 * (xhi - xlo or 1.0)
        pad_y = 0.05 * (yhi - ylo or 1.0)
        self.xlo, self.xhi = xlo - pad_x, xhi + pad_x
        self.ylo, self.yhi = ylo - pad_y, yhi + pad_y

    def px(self, x: float) -> float:
        return _ML + (x - self.xlo) / (self.xhi - self.xlo) * _PLOT_W

    def py(self, y: float) -> float:
        return _MT + _PLOT_H - (y - self.ylo) / (self.yhi - self.ylo) * _PLOT_H

    def frame(self, title: str, xlabel: str, ylabel: str) -> list[str]:
        parts = [
            f'<rect x="{_ML}" y="{_MT}" width="{_PLOT_W}" height="{_PLOT_H}" fill="none" stroke="#444"/>',
            f'<text x="{_W/2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
            f'<text x="{_ML + _PLOT_W/2:.1f}" y="{_H-12}" text-anchor="middle" font-size="12">{xlabel}</text>',
            f'<text x="16" y="{_MT + _PLOT_H/2:.1f}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 16 {_MT + _PLOT_H/2:.1f})">{ylabel}</text>',
        ]
        for t in _ticks(self.xlo, self.xhi):
            x = self.px(t)
            parts.append(f'<line x1="{x:.1f}" y1="{_MT+_PLOT_H}" x2="{x:.1f}" y2="{_MT+_PLOT_H+4}" stroke="#444"/>')
            parts.append(f'<text x="{x:.1f}" y="{_MT+_PLOT_H+18}" text-anchor="middle" font-size="10">{t:g}</text>')
        for t in _ticks(self.ylo, self.yhi):
            y = self.py(t)
            parts.append(f'<line x1="{_ML-4}" y1="{y:.1f}" x2="{_ML}" y2="{y:.1f}" stroke="#444"/>')
            parts.append(f'<text x="{_ML-8}" y="{y+3:.1f}" text-anchor="end" font-size="10">{t:g}</text>')
        return parts


def _document(parts: list[str]) -> str:
    body = "\n".join(parts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif">\n{body}\n</svg>\n'
    )


def scatter_svg(x, y, fit: tuple[float, float] | None = None, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    """Scatter plot with an optional fitted line (slope, intercept)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax = _Axes(float(x.min()), float(x.max()), float(y.min()), float(y.max()))
    parts = ax.frame(title, xlabel, ylabel)
    for xi, yi in zip(x, y):
        parts.append(f'<circle cx="{ax.px(xi):.1f}" cy="{ax.py(yi):.1f}" r="3" fill="#2266aa" fill-opacity="0.7"/>')
    if fit is not None and not any(math.isnan(v) for v in fit):
        slope, intercept = fit
        xs = (ax.xlo, ax.xhi)
        parts.append(
            f'<line x1="{ax.px(xs[0]):.1f}" y1="{ax.py(slope*xs[0]+intercept):.1f}" '
            f'x2="{ax.px(xs[1]):.1f}" y2="{ax.py(slope*xs[1]+intercept):.1f}" stroke="#d4a017" stroke-width="2"/>'
        )
    return _document(parts)


def bar_svg(names: list[str], values, title: str = "", ylabel: str = "") -> str:
    """Labelled bars, e.g. one KL value per clustering configuration."""
    values = np.asarray(values, dtype=float)
    ax = _Axes(0.0, float(len(names)), 0.0, float(values.max()) if values.size else 1.0)
    parts = ax.frame(title, "", ylabel)
    width = _PLOT_W / max(len(names), 1)
    for i, (name, v) in enumerate(zip(names, values)):
        x0 = ax.px(i + 0.15)
        x1 = ax.px(i + 0.85)
        y = ax.py(v)
        parts.append(f'<rect x="{x0:.1f}" y="{y:.1f}" width="{x1-x0:.1f}" height="{ax.py(0)-y:.1f}" fill="#2266aa"/>')
        parts.append(
            f'<text x="{(x0+x1)/2:.1f}" y="{_MT+_PLOT_H+18}" text-anchor="middle" font-size="9">{name}</text>'
        )
    return _document(parts)


def histogram_svg(edges, probs, curves: list[tuple[np.ndarray, np.ndarray, str]] | None = None, title: str = "", ylabel: str = "") -> str:
    """Step histogram of bin masses with optional reference curves."""
    edges = np.asarray(edges, dtype=float)
    probs = np.asarray(probs, dtype=float)
    widths = np.diff(edges)
    dens = probs / widths
    ymax = float(dens.max())
    if curves:
        ymax = max(ymax, max(float(np.max(c[1])) for c in curves))
    ax = _Axes(float(edges[0]), float(edges[-1]), 0.0, ymax)
    parts = ax.frame(title, "", ylabel)
    for b in range(probs.size):
        x0, x1 = ax.px(edges[b]), ax.px(edges[b + 1])
        y = ax.py(dens[b])
        parts.append(
            f'<rect x="{x0:.1f}" y="{y:.1f}" width="{x1-x0:.1f}" height="{ax.py(0)-y:.1f}" '
            f'fill="#2266aa" fill-opacity="0.5" stroke="#2266aa"/>'
        )
    colors = ("#d4a017", "#aa3322", "#33aa55")
    for ci, (xs, ys, _label) in enumerate(curves or []):
        pts = " ".join(f"{ax.px(float(a)):.1f},{ax.py(float(b)):.1f}" for a, b in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{colors[ci % 3]}" stroke-width="1.5"/>')
    return _document(parts)
