"""CSV and SVG output helpers.

Numbers are rendered with 6 significant digits and a '.' decimal point
regardless of locale. Files are written to a temporary sibling and renamed
into place so readers never see a partial file.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from html import escape
from pathlib import Path
from typing import Iterable, Sequence

from termlab.dataset import fmt_float

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def write_atomic(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _cell(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return fmt_float(v)
    return "" if v is None else v


def csv_text(columns: Sequence[str], rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])
    return buf.getvalue()


def write_csv(path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    return write_atomic(path, csv_text(columns, rows))


def svg_line_plot(series: dict[str, Sequence[tuple[float, float]]], title: str = "",
                  xlabel: str = "", ylabel: str = "", xlim=None, ylim=None,
                  dashed: Sequence[str] = (), width: int = 640, height: int = 480) -> str:
    """A minimal standalone SVG line chart (no scripts, fonts or external assets)."""
    pts = [p for s in series.values() for p in s if all(map(math.isfinite, p))]
    if xlim is None:
        xs = [p[0] for p in pts] or [0.0, 1.0]
        xlim = (min(xs), max(xs) if max(xs) > min(xs) else min(xs) + 1)
    if ylim is None:
        ys = [p[1] for p in pts] or [0.0, 1.0]
        ylim = (min(ys), max(ys) if max(ys) > min(ys) else min(ys) + 1)
    left, right, top, bottom = 60, 160, 40, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(x):
        return left + (x - xlim[0]) / (xlim[1] - xlim[0]) * pw

    def sy(y):
        return top + ph - (y - ylim[0]) / (ylim[1] - ylim[0]) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for k in range(6):
        fx = xlim[0] + k * (xlim[1] - xlim[0]) / 5
        fy = ylim[0] + k * (ylim[1] - ylim[0]) / 5
        out.append(f'<text x="{sx(fx):.1f}" y="{top + ph + 16}" text-anchor="middle">'
                   f'{fmt_float(round(fx, 4))}</text>')
        out.append(f'<text x="{left - 6}" y="{sy(fy) + 4:.1f}" text-anchor="end">'
                   f'{fmt_float(round(fy, 4))}</text>')
    if title:
        out.append(f'<text x="{left + pw / 2:.1f}" y="22" text-anchor="middle" '
                   f'font-size="14">{escape(title)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 10}" '
                   f'text-anchor="middle">{escape(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(ylabel)}</text>')
    for k, (name, s) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in s
                          if math.isfinite(x) and math.isfinite(y))
        dash = ' stroke-dasharray="6 4"' if name in dashed else ""
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} '
                   f'points="{coords}"/>')
        ly = top + 14 + 16 * k
        out.append(f'<line x1="{left + pw + 10}" y1="{ly - 4}" x2="{left + pw + 30}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text x="{left + pw + 35}" y="{ly}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
