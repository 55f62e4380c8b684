"""Minimal SVG emitter for the experiment figures: scatter, polylines, axes.

Deliberately dependency-free; figures are static output artifacts of the
CLI, nothing more.
"""

from __future__ import annotations

import numpy as np

_COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"]


class SvgFigure:
    def __init__(self, width=480, height=480, margin=40):
        self.width = width
        self.height = height
        self.margin = margin
        self.layers = []  # (kind, points, style)
        self._bounds = None

    def _grow(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        if self._bounds is None:
            self._bounds = [lo, hi]
        else:
            self._bounds = [np.minimum(self._bounds[0], lo), np.maximum(self._bounds[1], hi)]

    def scatter(self, pts, color=None, radius=3.0, label=None):
        self._grow(pts)
        self.layers.append(("scatter", np.atleast_2d(np.asarray(pts, dtype=float)), color, radius, label))

    def polyline(self, pts, color=None, stroke=1.5, label=None):
        self._grow(pts)
        self.layers.append(("polyline", np.atleast_2d(np.asarray(pts, dtype=float)), color, stroke, label))

    def _to_canvas(self, pts):
        lo, hi = self._bounds
        span = np.maximum(hi - lo, 1e-12)
        pad = 0.05 * span
        lo, hi = lo - pad, hi + pad
        span = hi - lo
        w = self.width - 2 * self.margin
        h = self.height - 2 * self.margin
        scale = min(w / span[0], h / span[1])
        mid = (lo + hi) / 2
        cx, cy = self.width / 2, self.height / 2
        out = np.empty_like(pts)
        out[:, 0] = cx + (pts[:, 0] - mid[0]) * scale
        out[:, 1] = cy - (pts[:, 1] - mid[1]) * scale
        return out

    def to_string(self) -> str:
        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
        ]
        if self._bounds is not None:
            # axes through the data origin when visible, else frame only
            zero = self._to_canvas(np.zeros((1, 2)))[0]
            m = self.margin
            if m <= zero[0] <= self.width - m:
                parts.append(
                    f'<line x1="{zero[0]:.1f}" y1="{m}" x2="{zero[0]:.1f}" y2="{self.height - m}" '
                    'stroke="#cccccc" stroke-width="1"/>'
                )
            if m <= zero[1] <= self.height - m:
                parts.append(
                    f'<line x1="{m}" y1="{zero[1]:.1f}" x2="{self.width - m}" y2="{zero[1]:.1f}" '
                    'stroke="#cccccc" stroke-width="1"/>'
                )
        label_y = 16
        for i, layer in enumerate(self.layers):
            kind, pts, color, size, label = layer
            color = color or _COLORS[i % len(_COLORS)]
            canvas = self._to_canvas(pts)
            if kind == "scatter":
                for p in canvas:
                    parts.append(f'<circle cx="{p[0]:.2f}" cy="{p[1]:.2f}" r="{size}" fill="{color}" fill-opacity="0.7"/>')
            else:
                coords = " ".join(f"{p[0]:.2f},{p[1]:.2f}" for p in canvas)
                parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="{size}"/>')
            if label:
                parts.append(f'<text x="8" y="{label_y}" font-size="12" fill="{color}">{label}</text>')
                label_y += 16
        parts.append("</svg>")
        return "\n".join(parts)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_string())
