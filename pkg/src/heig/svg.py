"""Minimal native SVG line plots (no plotting dependency)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=72, right=20, top=36, bottom=52)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Figure:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    lines: list = field(default_factory=list)
    bands: list = field(default_factory=list)
    vlines: list = field(default_factory=list)

    def line(self, x, y, label="", color=None, dashed=False):
        color = color or PALETTE[len(self.lines) % len(PALETTE)]
        self.lines.append((np.asarray(x, float), np.asarray(y, float), label, color, dashed))
        return self

    def band(self, x, lo, hi, color="#9ecae1", label=""):
        self.bands.append((np.asarray(x, float), np.asarray(lo, float), np.asarray(hi, float), color, label))
        return self

    def vline(self, x, label="", color="#555555"):
        self.vlines.append((float(x), label, color))
        return self

    def save(self, path):
        Path(path).write_text(self.render(), encoding="utf-8")

    def _limits(self):
        xs, ys = [], []
        for x, y, *_ in self.lines:
            ok = np.isfinite(x) & np.isfinite(y)
            xs.append(x[ok])
            ys.append(y[ok])
        for x, lo, hi, *_ in self.bands:
            ok = np.isfinite(x) & np.isfinite(lo) & np.isfinite(hi)
            xs.append(x[ok])
            ys.extend([lo[ok], hi[ok]])
        xs = np.concatenate(xs) if xs else np.array([0.0, 1.0])
        ys = np.concatenate(ys) if ys else np.array([0.0, 1.0])
        if xs.size == 0:
            xs = np.array([0.0, 1.0])
        if ys.size == 0:
            ys = np.array([0.0, 1.0])
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        if x0 == x1:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y0 == y1:
            y0, y1 = y0 - 0.5, y1 + 0.5
        pad = 0.05 * (y1 - y0)
        return x0, x1, y0 - pad, y1 + pad

    def render(self) -> str:
        x0, x1, y0, y1 = self._limits()
        pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

        def sx(x):
            return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

        def sy(y):
            return MARGIN["top"] + (y1 - y) / (y1 - y0) * ph

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        ]
        for x, lo, hi, color, _ in self.bands:
            ok = np.isfinite(lo) & np.isfinite(hi)
            if not ok.any():
                continue
            pts = [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok], hi[ok])]
            pts += [f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x[ok][::-1], lo[ok][::-1])]
            out.append(f'<polygon points="{" ".join(pts)}" fill="{color}" fill-opacity="0.5" stroke="none"/>')
        out.append(
            f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
            'fill="none" stroke="black"/>'
        )
        for tick in _ticks(x0, x1):
            px = sx(tick)
            out.append(f'<line x1="{px:.2f}" y1="{MARGIN["top"] + ph}" x2="{px:.2f}" '
                       f'y2="{MARGIN["top"] + ph + 5}" stroke="black"/>')
            out.append(f'<text x="{px:.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{tick:g}</text>')
        for tick in _ticks(y0, y1):
            py = sy(tick)
            out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{py:.2f}" x2="{MARGIN["left"]}" '
                       f'y2="{py:.2f}" stroke="black"/>')
            out.append(f'<text x="{MARGIN["left"] - 8}" y="{py + 4:.2f}" text-anchor="end">{tick:g}</text>')
        if y0 < 0 < y1:
            out.append(f'<line x1="{MARGIN["left"]}" y1="{sy(0):.2f}" x2="{MARGIN["left"] + pw}" '
                       f'y2="{sy(0):.2f}" stroke="#999999" stroke-width="0.5"/>')
        for xv, label, color in self.vlines:
            if x0 <= xv <= x1:
                out.append(f'<line x1="{sx(xv):.2f}" y1="{MARGIN["top"]}" x2="{sx(xv):.2f}" '
                           f'y2="{MARGIN["top"] + ph}" stroke="{color}" stroke-dasharray="2,3"/>')
        for x, y, label, color, dashed in self.lines:
            for seg in _finite_runs(x, y):
                pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in seg)
                dash = ' stroke-dasharray="6,4"' if dashed else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        entries = [(lbl, c) for *_, lbl, c, _ in self.lines if lbl]
        entries += [(lbl, c) for *_, c, lbl in self.bands if lbl]
        entries += [(lbl, c) for _, lbl, c in self.vlines if lbl]
        for k, (label, color) in enumerate(entries):
            y = MARGIN["top"] + 16 + 16 * k
            x = MARGIN["left"] + pw - 150
            out.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 20}" y2="{y - 4}" stroke="{color}" stroke-width="3"/>')
            out.append(f'<text x="{x + 26}" y="{y}">{escape(label)}</text>')
        out.append(f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" font-size="14">{escape(self.title)}</text>')
        out.append(f'<text x="{MARGIN["left"] + pw / 2}" y="{HEIGHT - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{MARGIN["top"] + ph / 2}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {MARGIN["top"] + ph / 2})">{escape(self.ylabel)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _ticks(lo, hi, target=6):
    span = hi - lo
    raw = span / target
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * span:
        ticks.append(round(v, 12))
        v += step
    return ticks


def _finite_runs(x, y):
    run = []
    for a, b in zip(x, y):
        if math.isfinite(a) and math.isfinite(b):
            run.append((a, b))
        elif run:
            yield run
            run = []
    if len(run) > 0:
        yield run
