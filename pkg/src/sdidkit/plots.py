"""Dependency-free SVG charts with companion CSV files.

Every chart writes ``<name>.svg`` next to ``<name>.csv`` holding the exact
plotted numbers (``repr`` formatting, so values round-trip).
"""

from __future__ import annotations

import csv
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .estimator import TrendSeries
from .weights import Method, WeightSet

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=70)
TREATED_COLOR = "#1f77b4"
SYNTH_COLOR = "#d62728"


class _Svg:
    def __init__(self, width=WIDTH, height=HEIGHT):
        self.width, self.height = width, height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        ]

    def line(self, x1, y1, x2, y2, stroke="#000", width=1.0, dash=None, cls=None):
        extra = f' stroke-dasharray="{dash}"' if dash else ""
        extra += f' class="{cls}"' if cls else ""
        self.parts.append(
            f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
            f'stroke="{stroke}" stroke-width="{width}"{extra}/>'
        )

    def polyline(self, xs, ys, stroke, cls):
        pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
        self.parts.append(
            f'<polyline class="{cls}" points="{pts}" fill="none" '
            f'stroke="{stroke}" stroke-width="2"/>'
        )

    def rect(self, x, y, w, h, fill, opacity=1.0, cls=None):
        extra = f' class="{cls}"' if cls else ""
        self.parts.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" '
            f'fill="{fill}" fill-opacity="{opacity:.4f}"{extra}/>'
        )

    def text(self, x, y, s, size=12, anchor="start", rotate=None):
        tr = f' transform="rotate({rotate} {x:.2f} {y:.2f})"' if rotate is not None else ""
        self.parts.append(
            f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" font-size="{size}" '
            f'text-anchor="{anchor}"{tr}>{escape(str(s))}</text>'
        )

    def save(self, path):
        Path(path).write_text("\n".join(self.parts + ["</svg>"]) + "\n", encoding="utf-8")


def _scale(lo, hi, a, b):
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    return lambda v: a + (v - lo) / (hi - lo) * (b - a)


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def emit_trend_plot(series: TrendSeries, meta: dict, path) -> tuple[Path, Path]:
    """Line chart of treated vs. synthetic paths.

    ``meta`` needs ``periods`` (labels) and ``t0`` (index of the first
    post period); ``title`` and ``method`` are optional. Pre-periods are
    shaded in proportion to the time weights when any are non-zero.
    """
    path = Path(path).with_suffix(".svg")
    csv_path = path.with_suffix(".csv")
    periods = list(meta["periods"])
    t0 = int(meta["t0"])
    T = len(periods)
    if len(series.treated_path) != T or len(series.synthetic_path) != T:
        raise ValueError("series length does not match the period labels")

    lam = np.zeros(T)
    lam[: len(series.lambda_profile)] = series.lambda_profile

    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("period", "treated", "synthetic", "lambda"))
        for t in range(T):
            w.writerow((periods[t], repr(float(series.treated_path[t])),
                        repr(float(series.synthetic_path[t])), repr(float(lam[t]))))

    svg = _Svg()
    L, R = MARGIN["left"], WIDTH - MARGIN["right"]
    top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]
    values = np.concatenate([series.treated_path, series.synthetic_path])
    lo, hi = float(values.min()), float(values.max())
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    ys = _scale(lo - pad, hi + pad, bottom, top)
    xs = _scale(0, max(T - 1, 1), L, R)
    step = (R - L) / max(T - 1, 1)

    if lam.max() > 0:
        peak = lam.max()
        for t in range(t0):
            if lam[t] > 0:
                svg.rect(xs(t) - step / 2, top, step, bottom - top, "#7f7f7f",
                         0.35 * lam[t] / peak, cls="lambda")

    svg.line(L, bottom, R, bottom)
    svg.line(L, top, L, bottom)
    for v in _ticks(lo - pad, hi + pad):
        svg.line(L - 4, ys(v), L, ys(v))
        svg.text(L - 6, ys(v) + 4, f"{v:.4g}", size=10, anchor="end")
    for t, label in enumerate(periods):
        svg.text(xs(t), bottom + 14, label, size=10, anchor="end", rotate=-45)
    boundary = xs(t0) - step / 2 if T > 1 else xs(0)
    svg.line(boundary, top, boundary, bottom, stroke="#555", dash="4 3", cls="treatment-start")

    svg.polyline([xs(t) for t in range(T)], [ys(v) for v in series.treated_path],
                 TREATED_COLOR, "treated")
    svg.polyline([xs(t) for t in range(T)], [ys(v) for v in series.synthetic_path],
                 SYNTH_COLOR, "synthetic")
    svg.line(R - 150, top - 22, R - 130, top - 22, stroke=TREATED_COLOR, width=2)
    svg.text(R - 126, top - 18, "treated", size=11)
    svg.line(R - 70, top - 22, R - 50, top - 22, stroke=SYNTH_COLOR, width=2)
    svg.text(R - 46, top - 18, "control", size=11)
    svg.text(L, top - 18, meta.get("title", "Estimated trends"), size=14)
    svg.save(path)
    return path, csv_path


def emit_weight_plot(w: WeightSet, unit_labels, path, title: str | None = None) -> tuple[Path, Path]:
    """Bar chart of control-unit weights, largest first.

    DID weights are drawn as a flat reference line at ``1 / n0``.
    """
    path = Path(path).with_suffix(".svg")
    csv_path = path.with_suffix(".csv")
    labels = list(unit_labels)
    omega = np.asarray(w.omega, dtype=float)
    if len(labels) != omega.size:
        raise ValueError("unit labels do not match the number of weights")
    order = sorted(range(omega.size), key=lambda i: (-omega[i], i))

    with csv_path.open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(("unit", "weight"))
        for i in order:
            out.writerow((labels[i], repr(float(omega[i]))))

    svg = _Svg()
    L, R = MARGIN["left"], WIDTH - MARGIN["right"]
    top, bottom = MARGIN["top"], HEIGHT - MARGIN["bottom"]
    hi = max(float(omega.max()), 1e-12)
    ys = _scale(0.0, hi * 1.05, bottom, top)
    n = omega.size
    slot = (R - L) / n
    svg.line(L, bottom, R, bottom)
    svg.line(L, top, L, bottom)
    for v in _ticks(0.0, hi * 1.05):
        svg.line(L - 4, ys(v), L, ys(v))
        svg.text(L - 6, ys(v) + 4, f"{v:.3f}", size=10, anchor="end")
    for k, i in enumerate(order):
        if omega[i] <= 0:
            continue
        x = L + k * slot + 0.1 * slot
        svg.rect(x, ys(omega[i]), 0.8 * slot, bottom - ys(omega[i]), TREATED_COLOR, cls="bar")
    if w.method is Method.DID:
        svg.line(L, ys(1.0 / n), R, ys(1.0 / n), stroke=SYNTH_COLOR, width=2, cls="uniform")
    for k, i in enumerate(order):
        svg.text(L + (k + 0.5) * slot, bottom + 12, labels[i], size=9, anchor="end", rotate=-60)
    svg.text(L, top - 18, title or f"Estimated {w.method.value} weights", size=14)
    svg.save(path)
    return path, csv_path
