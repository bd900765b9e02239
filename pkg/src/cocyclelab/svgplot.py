"""Small deterministic SVG plots, written by hand.

Two shapes cover the lab's reporting needs: the good-set fraction against
the perturbation index with its confidence band, and a histogram of
direction displacements.  The text is a pure function of the inputs (fixed
canvas, fixed tick rules, fixed float formatting), so rerunning an
experiment reproduces the plot byte for byte.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

_W, _H = 640, 400
_ML, _MR, _MT, _MB = 62, 20, 28, 46


def _f(x: float) -> str:
    return format(float(x), ".6g")


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_W} {_H}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="18" text-anchor="middle" font-size="14">'
        f"{title}</text>",
    ]


def _frame() -> list[str]:
    x0, y0 = _ML, _H - _MB
    x1, y1 = _W - _MR, _MT
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>',
    ]


def _xmap(t: float) -> float:
    return _ML + t * (_W - _ML - _MR)


def _ymap(t: float) -> float:
    return (_H - _MB) - t * (_H - _MB - _MT)


def goodset_curve_svg(rows, epsilon: float) -> str:
    """Good-set fraction by perturbation index with Wilson bands.

    ``rows`` is a sequence with attributes k, g_hat, ci_lo, ci_hi and
    censored; censored rows appear as crosses on the axis instead of
    points.
    """
    rows = list(rows)
    if not rows:
        raise ConfigError("curve needs at least one row")
    ks = [r.k for r in rows]
    span = max(max(ks) - min(ks), 1)

    def fx(k):
        return _xmap((k - min(ks)) / span)

    parts = _header(f"good-set fraction at epsilon = {_f(epsilon)}")
    parts += _frame()
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = _ymap(frac)
        parts.append(
            f'<line x1="{_ML - 4}" y1="{_f(y)}" x2="{_ML}" y2="{_f(y)}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{_f(y + 4)}" text-anchor="end">{_f(frac)}</text>'
        )
        if 0.0 < frac < 1.0:
            parts.append(
                f'<line x1="{_ML}" y1="{_f(y)}" x2="{_W - _MR}" y2="{_f(y)}" '
                f'stroke="#dddddd"/>'
            )
    for k in ks:
        x = fx(k)
        parts.append(
            f'<line x1="{_f(x)}" y1="{_H - _MB}" x2="{_f(x)}" y2="{_H - _MB + 4}" '
            f'stroke="black"/>'
        )
        parts.append(
            f'<text x="{_f(x)}" y="{_H - _MB + 18}" text-anchor="middle">{k}</text>'
        )
    parts.append(
        f'<text x="{(_ML + _W - _MR) / 2}" y="{_H - 8}" text-anchor="middle">'
        "perturbation index k (size 2^-k)</text>"
    )
    live = [r for r in rows if not r.censored]
    if live:
        pts = " ".join(f"{_f(fx(r.k))},{_f(_ymap(r.g_hat))}" for r in live)
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>'
        )
    for r in rows:
        x = fx(r.k)
        if r.censored:
            y = _H - _MB
            parts.append(
                f'<path d="M {_f(x - 4)} {_f(y - 12)} L {_f(x + 4)} {_f(y - 4)} '
                f'M {_f(x - 4)} {_f(y - 4)} L {_f(x + 4)} {_f(y - 12)}" '
                f'stroke="#bb3333" fill="none" class="censored"/>'
            )
            continue
        parts.append(
            f'<line x1="{_f(x)}" y1="{_f(_ymap(r.ci_lo))}" x2="{_f(x)}" '
            f'y2="{_f(_ymap(r.ci_hi))}" stroke="#1f6fb2"/>'
        )
        parts.append(
            f'<circle cx="{_f(x)}" cy="{_f(_ymap(r.g_hat))}" r="3" fill="#1f6fb2"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def histogram_svg(values, bins: int = 24, title: str = "histogram") -> str:
    """Bar chart of a 1-D sample; bin edges come from numpy's histogram."""
    arr = np.asarray(values, dtype=float).ravel()
    arr = arr[np.isfinite(arr)]
    if arr.size == 0:
        raise ConfigError("histogram needs at least one finite value")
    if bins < 1:
        raise ConfigError("histogram needs at least one bin")
    counts, edges = np.histogram(arr, bins=bins)
    top = max(int(counts.max()), 1)
    parts = _header(title)
    parts += _frame()
    width = (_W - _ML - _MR) / bins
    for i, c in enumerate(counts):
        h = (c / top) * (_H - _MB - _MT)
        x = _ML + i * width
        y = (_H - _MB) - h
        parts.append(
            f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(width * 0.92)}" '
            f'height="{_f(h)}" fill="#6b8fb2"/>'
        )
    for frac, val in ((0.0, edges[0]), (0.5, 0.5 * (edges[0] + edges[-1])), (1.0, edges[-1])):
        x = _xmap(frac)
        parts.append(
            f'<text x="{_f(x)}" y="{_H - _MB + 18}" text-anchor="middle">{_f(val)}</text>'
        )
    parts.append(
        f'<text x="{_ML - 8}" y="{_f(_ymap(1.0) + 4)}" text-anchor="end">{top}</text>'
    )
    parts.append(
        f'<text x="{_ML - 8}" y="{_f(_ymap(0.0) + 4)}" text-anchor="end">0</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(path: str, svg_text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg_text)
