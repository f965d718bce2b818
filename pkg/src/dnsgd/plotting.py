"""Minimal SVG line charts for comparing optimizer runs."""

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")

PANEL_W, PANEL_H = 360, 260
MARGIN = dict(left=60, right=15, top=30, bottom=45)


def _fmt(v):
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.1e}"
    return f"{v:.3g}"


def _ticks(lo, hi, n=5):
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _panel(x0, title, xlabel, series, log_scale):
    """SVG fragment for one panel; ``series`` maps label -> (xs, ys)."""
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys)
           if y is not None and math.isfinite(y) and (not log_scale or y > 0)]
    out = [f'<g transform="translate({x0},0)">',
           f'<text x="{PANEL_W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>']
    if not pts:
        out.append("</g>")
        return out
    tf = math.log10 if log_scale else (lambda v: v)
    xmin, xmax = min(p[0] for p in pts), max(p[0] for p in pts)
    ymin, ymax = min(tf(p[1]) for p in pts), max(tf(p[1]) for p in pts)
    if xmax == xmin:
        xmax = xmin + 1
    if ymax == ymin:
        ymin, ymax = ymin - 0.5, ymax + 0.5
    left, top = MARGIN["left"], MARGIN["top"]
    w = PANEL_W - MARGIN["left"] - MARGIN["right"]
    h = PANEL_H - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return left + (x - xmin) / (xmax - xmin) * w

    def sy(y):
        return top + h - (tf(y) - ymin) / (ymax - ymin) * h

    out.append(f'<rect x="{left}" y="{top}" width="{w}" height="{h}" fill="none" stroke="#444"/>')
    for t in _ticks(xmin, xmax):
        px = sx(t)
        out.append(f'<line x1="{px:.2f}" y1="{top + h}" x2="{px:.2f}" y2="{top + h + 4}" stroke="#444"/>')
        out.append(f'<text x="{px:.2f}" y="{top + h + 16}" text-anchor="middle" font-size="10">{_fmt(t)}</text>')
    for t in _ticks(ymin, ymax):
        py = top + h - (t - ymin) / (ymax - ymin) * h
        label = _fmt(10 ** t if log_scale else t)
        out.append(f'<line x1="{left - 4}" y1="{py:.2f}" x2="{left}" y2="{py:.2f}" stroke="#444"/>')
        out.append(f'<text x="{left - 6}" y="{py + 3:.2f}" text-anchor="end" font-size="10">{label}</text>')
    out.append(f'<text x="{left + w / 2}" y="{PANEL_H - 8}" text-anchor="middle" font-size="11">{escape(xlabel)}</text>')
    ylab = "loss (log)" if log_scale else "loss"
    out.append(f'<text x="14" y="{top + h / 2}" text-anchor="middle" font-size="11" '
               f'transform="rotate(-90 14 {top + h / 2})">{ylab}</text>')
    for color, (label, (xs, ys)) in zip(PALETTE, series.items()):
        coords = [f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys)
                  if y is not None and math.isfinite(y) and (not log_scale or y > 0)]
        if coords:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(coords)}"/>')
    out.append("</g>")
    return out


def comparison_svg(logs, log_scale=False, title=None):
    """Three panels: batch loss vs step, test loss vs epoch, batch loss vs seconds."""
    panels = [
        ("training loss vs step", "step",
         {log.optimizer: ([r.step for r in log.iterations], log.batch_losses) for log in logs}),
        ("test loss vs epoch", "epoch",
         {log.optimizer: ([r.epoch for r in log.epochs], log.test_losses) for log in logs}),
        ("training loss vs time", "seconds",
         {log.optimizer: ([r.elapsed_s for r in log.iterations], log.batch_losses) for log in logs}),
    ]
    width = PANEL_W * len(panels)
    height = PANEL_H + 30
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}" font-family="sans-serif">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        parts.append(f'<text x="{width / 2}" y="{height - 6}" text-anchor="middle" font-size="12">{escape(title)}</text>')
    for i, (ptitle, xlabel, series) in enumerate(panels):
        parts.extend(_panel(i * PANEL_W, ptitle, xlabel, series, log_scale))
    for i, log in enumerate(logs):
        color = PALETTE[i % len(PALETTE)]
        x = 20 + 110 * i
        parts.append(f'<line x1="{x}" y1="{height - 20}" x2="{x + 20}" y2="{height - 20}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{x + 24}" y="{height - 16}" font-size="11">{escape(log.optimizer)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
