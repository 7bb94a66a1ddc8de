"""Static SVG scatter of error ratios against the number of stops.

Plain string templating, so output is byte-stable for a given input.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 60, 20, 30, 50
IN_COLOR = "#c0392b"
OUT_COLOR = "#2e5aa8"


@dataclass
class RatioPlot:
    """Series to draw; every array is paired with its ``n`` array."""

    sweep_n: np.ndarray = field(default_factory=lambda: np.empty(0))
    sweep_in: np.ndarray = field(default_factory=lambda: np.empty(0))
    sweep_out: np.ndarray = field(default_factory=lambda: np.empty(0))
    empirical_n: np.ndarray = field(default_factory=lambda: np.empty(0))
    empirical_in: np.ndarray = field(default_factory=lambda: np.empty(0))
    empirical_out: np.ndarray = field(default_factory=lambda: np.empty(0))
    title: str = "Error ratios vs number of stops"

    def guide(self, samples: int = 200) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.n_range()
        n = np.linspace(lo, hi, samples)
        return n, np.sqrt(n)

    def n_range(self) -> tuple[float, float]:
        ns = np.concatenate([self.sweep_n, self.empirical_n])
        if ns.size == 0:
            return 1.0, 100.0
        return max(1.0, float(ns.min())), float(max(ns.max(), ns.min() + 1))

    def series(self):
        """``(name, n, value)`` triples in drawing order, undefined values dropped."""
        out = []
        for name, n, v in (
            ("sweep_ratio_in", self.sweep_n, self.sweep_in),
            ("sweep_ratio_out", self.sweep_n, self.sweep_out),
            ("guide_sqrt_n", *self.guide()),
            ("empirical_ratio_in", self.empirical_n, self.empirical_in),
            ("empirical_ratio_out", self.empirical_n, self.empirical_out),
        ):
            n = np.asarray(n, dtype=float)
            v = np.asarray(v, dtype=float)
            ok = np.isfinite(v)
            if ok.any():
                out.append((name, n[ok], v[ok]))
        return out


def plot_data_csv(p: RatioPlot) -> str:
    lines = ["series,n_stops,value"]
    for name, n, v in p.series():
        for a, b in zip(n, v):
            lines.append(f"{name},{a!r},{b!r}")
    return "\n".join(lines) + "\n"


def _nice_step(span: float, target: int = 6) -> float:
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def _f(x: float) -> str:
    return f"{x:.2f}"


def render_svg(p: RatioPlot) -> str:
    series = p.series()
    x_lo, x_hi = 0.0, p.n_range()[1]
    y_hi = max([float(v.max()) for _, _, v in series] + [1.0]) * 1.05
    xs = _nice_step(x_hi - x_lo)
    ys = _nice_step(y_hi)
    x_hi = math.ceil(x_hi / xs) * xs
    y_hi = math.ceil(y_hi / ys) * ys
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def X(n):
        return LEFT + (n - x_lo) / (x_hi - x_lo) * pw

    def Y(v):
        return TOP + ph - v / y_hi * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="18" text-anchor="middle" font-size="13">{escape(p.title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    k = 0
    while k * xs <= x_hi + 1e-9:
        x = X(k * xs)
        out.append(f'<line x1="{_f(x)}" y1="{TOP + ph}" x2="{_f(x)}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_f(x)}" y="{TOP + ph + 16}" text-anchor="middle">{k * xs:g}</text>')
        k += 1
    k = 0
    while k * ys <= y_hi + 1e-9:
        y = Y(k * ys)
        out.append(f'<line x1="{LEFT - 4}" y1="{_f(y)}" x2="{LEFT}" y2="{_f(y)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 6}" y="{_f(y + 4)}" text-anchor="end">{k * ys:g}</text>')
        k += 1
    out.append(f'<text x="{LEFT + pw / 2:.0f}" y="{HEIGHT - 12}" text-anchor="middle">number of stops N</text>')
    out.append(
        f'<text x="16" y="{TOP + ph / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {TOP + ph / 2:.0f})">error ratio</text>'
    )
    for name, n, v in series:
        out.append(f'<g class="{name}">')
        if name == "guide_sqrt_n":
            pts = " ".join(f"{_f(X(a))},{_f(Y(b))}" for a, b in zip(n, v))
            out.append(f'<polyline points="{pts}" fill="none" stroke="gray" stroke-dasharray="5,4"/>')
        else:
            color = IN_COLOR if name.endswith("_in") else OUT_COLOR
            for a, b in zip(n, v):
                x, y = X(a), Y(b)
                if name.startswith("empirical"):
                    out.append(
                        f'<path d="M{_f(x - 7)},{_f(y - 7)}L{_f(x + 7)},{_f(y + 7)}'
                        f'M{_f(x - 7)},{_f(y + 7)}L{_f(x + 7)},{_f(y - 7)}" '
                        f'stroke="{color}" stroke-width="2.5"/>'
                    )
                elif name.endswith("_in"):
                    out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="3" fill="none" stroke="{color}"/>')
                else:
                    out.append(
                        f'<rect x="{_f(x - 3)}" y="{_f(y - 3)}" width="6" height="6" '
                        f'fill="none" stroke="{color}"/>'
                    )
        out.append("</g>")
    legend = [
        ("boarding ratio", IN_COLOR),
        ("alighting ratio", OUT_COLOR),
        ("sqrt(N)", "gray"),
    ]
    for i, (label, color) in enumerate(legend):
        y = TOP + 14 + 14 * i
        out.append(f'<rect x="{LEFT + 10}" y="{y - 8}" width="8" height="8" fill="{color}"/>')
        out.append(f'<text x="{LEFT + 22}" y="{y}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
