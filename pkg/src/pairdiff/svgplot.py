"""Minimal deterministic SVG line plot for sweep results."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .montecarlo import SweepResult

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 30, 60
PALETTE = ("#c0392b", "#2471a3", "#1e8449", "#7d3c98", "#b9770e")


def _num(v: float) -> str:
    return f"{v:.2f}"


def render_sweep(result: SweepResult, title: str = "") -> str:
    """Error rate with Wilson bars against the swept parameter, plus dashed prediction markers."""
    rows = result.rows
    xs = [r.param for r in rows] or [0.0, 1.0]
    x0, x1 = min(xs), max(xs)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def sx(v):
        return LEFT + (v - x0) / (x1 - x0) * pw

    def sy(p):
        return TOP + (1.0 - p) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    for k in range(6):
        p = k / 5
        y = sy(p)
        out.append(f'<line x1="{LEFT - 4}" y1="{_num(y)}" x2="{LEFT}" y2="{_num(y)}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{_num(y + 4)}" font-size="11" text-anchor="end">{p:.1f}</text>')
    for k in range(6):
        v = x0 + (x1 - x0) * k / 5
        x = sx(v)
        out.append(f'<line x1="{_num(x)}" y1="{TOP + ph}" x2="{_num(x)}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{_num(x)}" y="{TOP + ph + 18}" font-size="11" text-anchor="middle">{v:.4g}</text>')
    out.append(
        f'<text x="{LEFT + pw / 2:.2f}" y="{HEIGHT - 15}" font-size="13" text-anchor="middle">'
        f"{escape(result.param_path)}</text>"
    )
    out.append(
        f'<text x="18" y="{TOP + ph / 2:.2f}" font-size="13" text-anchor="middle" '
        f'transform="rotate(-90 18 {TOP + ph / 2:.2f})">empirical error probability</text>'
    )
    if title:
        out.append(f'<text x="{LEFT + pw / 2:.2f}" y="18" font-size="14" text-anchor="middle">{escape(title)}</text>')

    for i, (name, pos) in enumerate(sorted(result.marker_positions().items())):
        x = sx(pos)
        colour = PALETTE[i % len(PALETTE)]
        out.append(
            f'<line x1="{_num(x)}" y1="{TOP}" x2="{_num(x)}" y2="{TOP + ph}" stroke="{colour}" stroke-dasharray="5,4"/>'
        )
        out.append(f'<text x="{_num(x + 3)}" y="{TOP + 12 + 13 * i}" font-size="10" fill="{colour}">{escape(name)}</text>')

    for r in rows:
        x = sx(r.param)
        out.append(
            f'<line x1="{_num(x)}" y1="{_num(sy(r.ci_low))}" x2="{_num(x)}" y2="{_num(sy(r.ci_high))}" stroke="gray"/>'
        )
    if rows:
        pts = " ".join(f"{_num(sx(r.param))},{_num(sy(r.pe))}" for r in rows)
        out.append(f'<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>')
        for r in rows:
            out.append(f'<circle cx="{_num(sx(r.param))}" cy="{_num(sy(r.pe))}" r="3" fill="black"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
