"""Minimal deterministic SVG line/scatter plots (no plotting dependency)."""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

MARGIN = 0.05
PERIOD_COLORS = {1: "#000000", 2: "#1f4fd8", 3: "#d62728", 4: "#d4a017", 8: "#7b2cbf"}
LONG_PERIOD_COLOR = "#2ca02c"
APERIODIC_COLOR = "#2ca02c"


def _fmt(v: float) -> str:
    return f"{v:.2f}"


@dataclass
class _Layer:
    kind: str
    xs: np.ndarray
    ys: np.ndarray
    color: str
    width: float = 1.0
    dash: str | None = None
    label: str | None = None


@dataclass
class Figure:
    width: int = 640
    height: int = 480
    title: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    axis_values: bool = True
    layers: list[_Layer] = field(default_factory=list)

    pad_left = 70
    pad_right = 20
    pad_top = 36
    pad_bottom = 50

    def line(self, xs, ys, color="#000000", width=1.0, dash=None, label=None):
        self.layers.append(_Layer("line", np.asarray(xs, float), np.asarray(ys, float), color, width, dash, label))
        return self

    def points(self, xs, ys, color="#000000", size=1.0, label=None):
        self.layers.append(_Layer("points", np.asarray(xs, float), np.asarray(ys, float), color, size, None, label))
        return self

    def _ranges(self):
        xs = np.concatenate([l.xs[np.isfinite(l.xs)] for l in self.layers] or [np.zeros(1)])
        ys = np.concatenate([l.ys[np.isfinite(l.ys)] for l in self.layers] or [np.zeros(1)])
        out = []
        for arr in (xs, ys):
            lo, hi = (float(arr.min()), float(arr.max())) if arr.size else (0.0, 1.0)
            span = hi - lo
            if span == 0.0:
                span = abs(lo) or 1.0
            out.append((lo - MARGIN * span, hi + MARGIN * span))
        return out

    def render(self) -> str:
        (x0, x1), (y0, y1) = self._ranges()
        left, top = self.pad_left, self.pad_top
        pw = self.width - self.pad_left - self.pad_right
        ph = self.height - self.pad_top - self.pad_bottom

        def px(x):
            return left + (x - x0) / (x1 - x0) * pw

        def py(y):
            return top + ph - (y - y0) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">',
            f'<rect x="0" y="0" width="{self.width}" height="{self.height}" style="fill:#ffffff"/>',
        ]
        if self.title:
            out.append(
                f'<text x="{self.width / 2:.1f}" y="22" style="font-family:sans-serif;font-size:14px;'
                f'text-anchor:middle">{escape(self.title)}</text>'
            )
        out.append(
            f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" '
            'style="fill:none;stroke:#444444;stroke-width:1"/>'
        )
        if self.axis_values:
            for t in np.linspace(x0, x1, 5):
                out.append(
                    f'<text x="{_fmt(px(t))}" y="{top + ph + 16}" style="font-family:sans-serif;'
                    f'font-size:10px;text-anchor:middle">{t:.3g}</text>'
                )
            for t in np.linspace(y0, y1, 5):
                out.append(
                    f'<text x="{left - 6}" y="{_fmt(py(t) + 3)}" style="font-family:sans-serif;'
                    f'font-size:10px;text-anchor:end">{t:.3g}</text>'
                )
        if self.xlabel:
            out.append(
                f'<text x="{left + pw / 2:.1f}" y="{self.height - 10}" style="font-family:sans-serif;'
                f'font-size:12px;text-anchor:middle">{escape(self.xlabel)}</text>'
            )
        if self.ylabel:
            cy = top + ph / 2
            out.append(
                f'<text x="16" y="{cy:.1f}" transform="rotate(-90 16 {cy:.1f})" style="font-family:'
                f'sans-serif;font-size:12px;text-anchor:middle">{escape(self.ylabel)}</text>'
            )
        for layer in self.layers:
            ok = np.isfinite(layer.xs) & np.isfinite(layer.ys)
            qx, qy = px(layer.xs[ok]), py(layer.ys[ok])
            if layer.kind == "line":
                if qx.size < 2:
                    continue
                pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(qx, qy))
                dash = f";stroke-dasharray:{layer.dash}" if layer.dash else ""
                out.append(
                    f'<polyline points="{pts}" style="fill:none;stroke:{layer.color};'
                    f'stroke-width:{layer.width}{dash}"/>'
                )
            else:
                # one path of unit ticks, deduplicated at pixel resolution
                cells = sorted({(int(round(a * 2)), int(round(b * 2))) for a, b in zip(qx, qy)})
                if not cells:
                    continue
                d = "".join(f"M{a / 2:.1f} {b / 2:.1f}h{layer.width}" for a, b in cells)
                out.append(
                    f'<path d="{d}" style="fill:none;stroke:{layer.color};stroke-width:{layer.width}"/>'
                )
        out.append("</svg>")
        return "\n".join(out) + "\n"


def period_color(period: int) -> str:
    if period in PERIOD_COLORS:
        return PERIOD_COLORS[period]
    return APERIODIC_COLOR if period == 0 else LONG_PERIOD_COLOR


def bifurcation_figure(diagram, title=None, xlabel="parameter", ylabel="attractor", axis_values=True) -> Figure:
    fig = Figure(width=900, height=560, title=title, xlabel=xlabel, ylabel=ylabel, axis_values=axis_values)
    periods = np.asarray(diagram.periods)
    for period in sorted(set(int(p) for p in periods if p >= 0)):
        rows = np.nonzero(periods == period)[0]
        xs = np.repeat(diagram.param_grid[rows], diagram.attractor_samples.shape[1])
        ys = diagram.attractor_samples[rows].ravel()
        fig.points(xs, ys, color=period_color(period), size=1.0, label=f"period {period}")
    return fig


def cobweb_figure(trace, title=None, axis_values=True) -> Figure:
    fig = Figure(width=600, height=600, title=title, axis_values=axis_values)
    if trace.two_step:
        fig.line(*trace.curves["gain"], color="#d62728", width=3.0, label="gain")
        fig.line(*trace.curves["loss"], color="#1f4fd8", width=1.5, dash="6,4", label="loss")
        fig.xlabel, fig.ylabel = "post-gain energy", "post-loss energy"
    else:
        fig.line(*trace.curves["map"], color="#d62728", width=3.0, label="map")
        fig.line(*trace.curves["diagonal"], color="#1f4fd8", width=1.5, dash="6,4", label="diagonal")
        fig.xlabel, fig.ylabel = "E_n", "E_n+1"
    v = trace.vertices()
    fig.line(v[:, 0], v[:, 1], color="#222222", width=0.6, label="cobweb")
    return fig


def series_figure(ns, values, title=None, xlabel="n", ylabel="value", axis_values=True) -> Figure:
    fig = Figure(title=title, xlabel=xlabel, ylabel=ylabel, axis_values=axis_values)
    fig.line(ns, values, color="#d62728", width=1.0)
    fig.points(ns, values, color="#222222", size=2.0)
    return fig
