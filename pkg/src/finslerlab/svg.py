"""Minimal SVG line and scatter plots, written without a plotting library."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, k: int = 5) -> list:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / k
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def plot(series, path, title: str = "", xlabel: str = "", ylabel: str = "",
         logx: bool = False, logy: bool = False, width: int = 640, height: int = 420) -> None:
    """Write a plot of ``series``: dicts with keys x, y, label and style ('line' or 'scatter')."""
    tx = (lambda v: math.log10(v)) if logx else float
    ty = (lambda v: math.log10(v)) if logy else float
    pts = []
    for s in series:
        pts.append([(tx(x), ty(y)) for x, y in zip(s["x"], s["y"])
                    if math.isfinite(x) and math.isfinite(y) and (not logx or x > 0) and (not logy or y > 0)])
    allp = [p for ps in pts for p in ps] or [(0.0, 0.0)]
    x0, x1 = min(p[0] for p in allp), max(p[0] for p in allp)
    y0, y1 = min(p[1] for p in allp), max(p[1] for p in allp)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    pad_y = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad_y, y1 + pad_y
    L, R, T, B = 70, 20, 40, 50
    pw, ph = width - L - R, height - T - B

    def X(v):
        return L + (v - x0) / (x1 - x0) * pw

    def Y(v):
        return T + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
        f'<text x="{width / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<text x="{L + pw / 2}" y="{height - 10}" text-anchor="middle">{escape(xlabel)}</text>',
        f'<text x="16" y="{T + ph / 2}" text-anchor="middle" transform="rotate(-90 16 {T + ph / 2})">{escape(ylabel)}</text>',
    ]
    for t in _ticks(x0, x1):
        lab = _fmt(10**t) if logx else _fmt(t)
        out.append(f'<line x1="{_fmt(X(t))}" y1="{T + ph}" x2="{_fmt(X(t))}" y2="{T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(X(t))}" y="{T + ph + 18}" text-anchor="middle">{lab}</text>')
    for t in _ticks(y0, y1):
        lab = _fmt(10**t) if logy else _fmt(t)
        out.append(f'<line x1="{L - 5}" y1="{_fmt(Y(t))}" x2="{L}" y2="{_fmt(Y(t))}" stroke="black"/>')
        out.append(f'<text x="{L - 8}" y="{_fmt(Y(t) + 4)}" text-anchor="end">{lab}</text>')
    for k, (s, ps) in enumerate(zip(series, pts)):
        color = COLORS[k % len(COLORS)]
        if s.get("style", "line") == "line" and len(ps) > 1:
            d = " ".join(f"{_fmt(X(a))},{_fmt(Y(b))}" for a, b in ps)
            out.append(f'<polyline points="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        else:
            for a, b in ps:
                out.append(f'<circle cx="{_fmt(X(a))}" cy="{_fmt(Y(b))}" r="3" fill="{color}"/>')
        if s.get("label"):
            ly = T + 16 * (k + 1)
            out.append(f'<rect x="{L + pw - 150}" y="{ly - 9}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{L + pw - 135}" y="{ly}">{escape(str(s["label"]))}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
