"""Minimal deterministic SVG charts.

Hand-written rather than delegated to a plotting library so that identical
inputs produce byte-identical files (no embedded timestamps, hashes, or
font-dependent geometry), which the CLI promises.
"""

from __future__ import annotations

import math
from typing import Sequence

_WIDTH, _HEIGHT = 640, 400
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 20, 40, 50
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not math.isfinite(lo) or not math.isfinite(hi) or hi <= lo:
        return [lo]
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
        out.append(v)
        v += step
    return out


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str) -> None:
        self.parts: list[str] = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
            f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
            "<!-- schema=seqsew.plot.v1 -->",
            f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
            f'<text x="{_WIDTH / 2}" y="22" text-anchor="middle" font-family="monospace" '
            f'font-size="14">{title}</text>',
            f'<text x="{_WIDTH / 2}" y="{_HEIGHT - 10}" text-anchor="middle" '
            f'font-family="monospace" font-size="11">{xlabel}</text>',
            f'<text x="14" y="{_HEIGHT / 2}" text-anchor="middle" font-family="monospace" '
            f'font-size="11" transform="rotate(-90 14 {_HEIGHT / 2})">{ylabel}</text>',
        ]
        self.x0, self.x1 = _MARGIN_L, _WIDTH - _MARGIN_R
        self.y0, self.y1 = _HEIGHT - _MARGIN_B, _MARGIN_T

    def set_limits(self, xlo: float, xhi: float, ylo: float, yhi: float) -> None:
        if xhi <= xlo:
            xhi = xlo + 1.0
        if yhi <= ylo:
            yhi = ylo + 1.0
        self.xlo, self.xhi, self.ylo, self.yhi = xlo, xhi, ylo, yhi
        self.parts.append(
            f'<rect x="{self.x0}" y="{self.y1}" width="{self.x1 - self.x0}" '
            f'height="{self.y0 - self.y1}" fill="none" stroke="black"/>'
        )
        for tx in _ticks(xlo, xhi):
            px = self._px(tx)
            self.parts.append(
                f'<line x1="{_fmt(px)}" y1="{self.y0}" x2="{_fmt(px)}" y2="{self.y0 + 4}" stroke="black"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(px)}" y="{self.y0 + 16}" text-anchor="middle" '
                f'font-family="monospace" font-size="10">{_fmt(tx)}</text>'
            )
        for ty in _ticks(ylo, yhi):
            py = self._py(ty)
            self.parts.append(
                f'<line x1="{self.x0 - 4}" y1="{_fmt(py)}" x2="{self.x0}" y2="{_fmt(py)}" stroke="black"/>'
            )
            self.parts.append(
                f'<text x="{self.x0 - 6}" y="{_fmt(py + 3)}" text-anchor="end" '
                f'font-family="monospace" font-size="10">{_fmt(ty)}</text>'
            )

    def _px(self, x: float) -> float:
        return self.x0 + (x - self.xlo) / (self.xhi - self.xlo) * (self.x1 - self.x0)

    def _py(self, y: float) -> float:
        return self.y0 - (y - self.ylo) / (self.yhi - self.ylo) * (self.y0 - self.y1)

    def polyline(self, xs: Sequence[float], ys: Sequence[float], color: str, label: str | None = None, idx: int = 0) -> None:
        pts = " ".join(f"{_fmt(self._px(x))},{_fmt(self._py(y))}" for x, y in zip(xs, ys))
        self.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        if label:
            ly = _MARGIN_T + 14 * idx
            self.parts.append(
                f'<line x1="{self.x1 - 130}" y1="{ly}" x2="{self.x1 - 110}" y2="{ly}" stroke="{color}" stroke-width="2"/>'
            )
            self.parts.append(
                f'<text x="{self.x1 - 105}" y="{ly + 3}" font-family="monospace" font-size="10">{label}</text>'
            )

    def bars(self, labels: Sequence[str], values: Sequence[float], colors: Sequence[str]) -> None:
        n = len(values)
        slot = (self.x1 - self.x0) / max(n, 1)
        width = slot * 0.6
        zero_py = self._py(max(self.ylo, min(0.0, self.yhi)))
        for i, (label, v, color) in enumerate(zip(labels, values, colors)):
            cx = self.x0 + slot * (i + 0.5)
            py = self._py(v)
            top, height = (py, zero_py - py) if v >= 0 else (zero_py, py - zero_py)
            self.parts.append(
                f'<rect x="{_fmt(cx - width / 2)}" y="{_fmt(top)}" width="{_fmt(width)}" '
                f'height="{_fmt(max(height, 0.5))}" fill="{color}"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(cx)}" y="{self.y0 + 16}" text-anchor="middle" '
                f'font-family="monospace" font-size="9">{label}</text>'
            )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def line_chart(
    title: str,
    xlabel: str,
    ylabel: str,
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
) -> str:
    canvas = _Canvas(title, xlabel, ylabel)
    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys if math.isfinite(y)]
    canvas.set_limits(min(all_x), max(all_x), min(all_y + [0.0]), max(all_y))
    for i, (label, xs, ys) in enumerate(series):
        canvas.polyline(xs, ys, _COLORS[i % len(_COLORS)], label or None, i)
    return canvas.render()


def bar_chart(title: str, xlabel: str, ylabel: str, labels: Sequence[str], values: Sequence[float]) -> str:
    canvas = _Canvas(title, xlabel, ylabel)
    finite = [v for v in values if math.isfinite(v)]
    lo, hi = min(finite + [0.0]), max(finite + [0.0])
    canvas.set_limits(-0.5, len(values) - 0.5, lo, hi if hi > lo else lo + 1.0)
    colors = ["#2ca02c" if v >= 0 else "#d62728" for v in values]
    canvas.bars(labels, values, colors)
    return canvas.render()
