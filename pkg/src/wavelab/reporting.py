"""Result persistence: atomic CSV/JSON writers and minimal SVG log-log plots.

Every file is written to a temporary sibling and renamed into place, so no
failure path leaves a partial file.  Floats are serialized with 17 significant
digits, which round-trips IEEE doubles and makes reruns byte-comparable.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from typing import Sequence

__all__ = ["fmt_float", "write_csv", "write_json", "write_svg_loglog"]


def fmt_float(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt_float(v) for v in row))
    _atomic_write(path, "\n".join(lines) + "\n")


def write_json(path, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True, default=fmt_float) + "\n")


def write_svg_loglog(path, series: dict, title: str, fit_lines: dict | None = None,
                     width: int = 640, height: int = 480) -> None:
    """One log-log panel: per-series markers plus optional fitted lines.

    series maps label -> (xs, ys); fit_lines maps label -> (slope, intercept)
    in log10 coordinates.
    """
    pts = [(x, y) for xs, ys in series.values() for x, y in zip(xs, ys) if x > 0 and y > 0]
    if not pts:
        raise ValueError("nothing positive to plot on log-log axes")
    lx = [math.log10(p[0]) for p in pts]
    ly = [math.log10(p[1]) for p in pts]
    x0, x1 = min(lx), max(lx)
    y0, y1 = min(ly), max(ly)
    x0, x1 = x0 - 0.1 * (x1 - x0 + 1e-9), x1 + 0.1 * (x1 - x0 + 1e-9)
    y0, y1 = y0 - 0.1 * (y1 - y0 + 1e-9), y1 + 0.1 * (y1 - y0 + 1e-9)
    mleft, mbot, mtop, mright = 60, 40, 30, 20
    pw, ph = width - mleft - mright, height - mtop - mbot

    def px(x):
        return mleft + pw * (math.log10(x) - x0) / (x1 - x0)

    def py(y):
        return mtop + ph * (y1 - math.log10(y)) / (y1 - y0)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
        f'<rect x="{mleft}" y="{mtop}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for i, (label, (xs, ys)) in enumerate(sorted(series.items())):
        color = colors[i % len(colors)]
        for x, y in zip(xs, ys):
            if x > 0 and y > 0:
                parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{color}"/>')
        parts.append(f'<text x="{mleft + 8}" y="{mtop + 16 + 14 * i}" font-size="11" '
                     f'fill="{color}">{label}</text>')
        if fit_lines and label in fit_lines:
            slope, intercept = fit_lines[label]
            xa, xb = 10**x0, 10**x1
            ya, yb = 10 ** (slope * x0 + intercept), 10 ** (slope * x1 + intercept)
            parts.append(f'<line x1="{px(xa):.1f}" y1="{py(ya):.1f}" x2="{px(xb):.1f}" '
                         f'y2="{py(yb):.1f}" stroke="{color}" stroke-dasharray="4,3"/>')
    parts.append("</svg>")
    _atomic_write(path, "\n".join(parts) + "\n")
