"""Minimal SVG line plots: axes, one polyline per file, optional threshold."""

from __future__ import annotations

from xml.sax.saxutils import escape

WIDTH = 640
HEIGHT = 400
MARGIN = 48


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span <= 0.0:
        span = 1.0
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in values]


def svg_line_plot(series, threshold: float | None = None,
                  title: str = "") -> str:
    """An SVG document plotting one value series against its index."""
    values = [float(v) for v in series]
    if not values:
        values = [0.0]
    lo = min(values + ([threshold] if threshold is not None else []))
    hi = max(values + ([threshold] if threshold is not None else []))
    lo = min(lo, 0.0)
    xs = _scale(range(len(values)), 0, max(len(values) - 1, 1), MARGIN, WIDTH - MARGIN)
    ys = _scale(values, lo, hi, HEIGHT - MARGIN, MARGIN)
    points = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" '
        f'y2="{HEIGHT - MARGIN}" stroke="black"/>',
    ]
    if threshold is not None:
        ty = _scale([threshold], lo, hi, HEIGHT - MARGIN, MARGIN)[0]
        parts.append(
            f'<line x1="{MARGIN}" y1="{ty:.2f}" x2="{WIDTH - MARGIN}" '
            f'y2="{ty:.2f}" stroke="red" stroke-dasharray="6,4"/>')
    if title:
        parts.append(
            f'<text x="{MARGIN}" y="{MARGIN - 16}" font-size="14">'
            f'{escape(title)}</text>')
    parts.append(
        f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" '
        f'points="{points}"/>')
    parts.append("</svg>")
    return "\n".join(parts)
