"""Hand-rolled static SVG renderers for 1-D and 2-D projections.

Output is a plain SVG 1.1 document built from formatted strings, so the
same inputs always produce the same bytes (no timestamps, no library
version strings).
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .errors import DataError

PALETTE = (
    "#4c72b0",
    "#dd8452",
    "#55a868",
    "#c44e52",
    "#8172b3",
    "#937860",
    "#da8bc3",
    "#8c8c8c",
    "#ccb974",
    "#64b5cd",
)

_MARGIN = 56.0


def _fmt(v: float) -> str:
    return f"{v:.3f}"


def _tick_label(v: float) -> str:
    return f"{v:.4g}"


def _class_order(labels) -> list[str]:
    return sorted(set(labels))


def _axis_frame(width, height, x_label, y_label, title):
    parts = [
        f'<rect x="{_fmt(_MARGIN)}" y="{_fmt(_MARGIN)}" width="{_fmt(width - 2 * _MARGIN)}" '
        f'height="{_fmt(height - 2 * _MARGIN)}" fill="none" stroke="#333333" stroke-width="1"/>'
    ]
    parts.append(
        f'<text x="{_fmt(width / 2)}" y="{_fmt(height - 12)}" text-anchor="middle" '
        f'font-size="13" fill="#333333">{escape(x_label)}</text>'
    )
    if y_label:
        parts.append(
            f'<text x="16" y="{_fmt(height / 2)}" text-anchor="middle" font-size="13" '
            f'fill="#333333" transform="rotate(-90 16 {_fmt(height / 2)})">{escape(y_label)}</text>'
        )
    if title:
        parts.append(
            f'<text x="{_fmt(width / 2)}" y="28" text-anchor="middle" font-size="15" '
            f'fill="#111111">{escape(title)}</text>'
        )
    return parts


def _legend(classes, width):
    parts = []
    for i, c in enumerate(classes):
        y = _MARGIN + 16 + 18 * i
        color = PALETTE[i % len(PALETTE)]
        parts.append(
            f'<rect x="{_fmt(width - _MARGIN - 90)}" y="{_fmt(y - 9)}" width="10" height="10" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{_fmt(width - _MARGIN - 75)}" y="{_fmt(y)}" font-size="12" '
            f'fill="#333333">{escape(str(c))}</text>'
        )
    return parts


def _document(width, height, body) -> str:
    head = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:g}" '
        f'height="{height:g}" viewBox="0 0 {width:g} {height:g}">\n'
        f'<rect x="0" y="0" width="{width:g}" height="{height:g}" fill="#ffffff"/>\n'
    )
    return head + "\n".join(body) + "\n</svg>\n"


def _span(vals: np.ndarray) -> tuple[float, float]:
    vmin = float(np.min(vals))
    vmax = float(np.max(vals))
    pad = 0.05 * (vmax - vmin) if vmax > vmin else max(abs(vmax), 1.0) * 0.05
    return vmin - pad, vmax + pad


def scatter_svg(
    points,
    labels=None,
    arrows=None,
    arrow_labels=None,
    width: float = 640.0,
    height: float = 480.0,
    x_label: str = "z1",
    y_label: str = "z2",
    title: str | None = None,
) -> str:
    """Scatter plot of 2-D points, colored by label, with optional biplot arrows.

    `arrows` is a (p, 2) array of feature loadings drawn from the data
    centroid, scaled to 35 percent of the plot; `arrow_labels` names them.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[1] != 2:
        raise DataError(f"scatter needs (n, 2) points, got {P.shape}")
    if labels is not None and len(labels) != P.shape[0]:
        raise DataError("label count does not match point count")
    x0, x1 = _span(P[:, 0])
    y0, y1 = _span(P[:, 1])
    iw = width - 2 * _MARGIN
    ih = height - 2 * _MARGIN

    def sx(v):
        return _MARGIN + (v - x0) / (x1 - x0) * iw

    def sy(v):
        return height - _MARGIN - (v - y0) / (y1 - y0) * ih

    body = _axis_frame(width, height, x_label, y_label, title)
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        tx = x0 + frac * (x1 - x0)
        ty = y0 + frac * (y1 - y0)
        body.append(
            f'<text x="{_fmt(sx(tx))}" y="{_fmt(height - _MARGIN + 16)}" text-anchor="middle" '
            f'font-size="10" fill="#555555">{_tick_label(tx)}</text>'
        )
        body.append(
            f'<text x="{_fmt(_MARGIN - 6)}" y="{_fmt(sy(ty) + 3)}" text-anchor="end" '
            f'font-size="10" fill="#555555">{_tick_label(ty)}</text>'
        )
    classes = _class_order(labels) if labels is not None else []
    color_of = {c: PALETTE[i % len(PALETTE)] for i, c in enumerate(classes)}
    for i in range(P.shape[0]):
        color = color_of[labels[i]] if labels is not None else PALETTE[0]
        body.append(
            f'<circle cx="{_fmt(sx(P[i, 0]))}" cy="{_fmt(sy(P[i, 1]))}" r="3" '
            f'fill="{color}" fill-opacity="0.75"/>'
        )
    if arrows is not None:
        A = np.asarray(arrows, dtype=float)
        if A.ndim != 2 or A.shape[1] != 2:
            raise DataError(f"arrows must be (p, 2), got {A.shape}")
        names = list(arrow_labels) if arrow_labels is not None else [
            f"x{j + 1}" for j in range(A.shape[0])
        ]
        if len(names) != A.shape[0]:
            raise DataError("arrow label count does not match arrow count")
        cx = float(np.mean(P[:, 0]))
        cy = float(np.mean(P[:, 1]))
        longest = float(np.max(np.linalg.norm(A, axis=1)))
        if longest > 0:
            scale = 0.35 * min((x1 - x0), (y1 - y0)) / longest
            for j in range(A.shape[0]):
                ex = cx + scale * A[j, 0]
                ey = cy + scale * A[j, 1]
                body.append(
                    f'<line x1="{_fmt(sx(cx))}" y1="{_fmt(sy(cy))}" x2="{_fmt(sx(ex))}" '
                    f'y2="{_fmt(sy(ey))}" stroke="#222222" stroke-width="1.2"/>'
                )
                body.append(
                    f'<text x="{_fmt(sx(ex) + 3)}" y="{_fmt(sy(ey) - 3)}" font-size="10" '
                    f'fill="#222222">{escape(names[j])}</text>'
                )
    body.extend(_legend(classes, width))
    return _document(width, height, body)


def histogram_svg(
    values,
    labels=None,
    bins: int = 30,
    width: float = 640.0,
    height: float = 480.0,
    x_label: str = "z1",
    title: str | None = None,
) -> str:
    """Overlaid per-class histograms of a 1-D projection."""
    v = np.asarray(values, dtype=float).reshape(-1)
    if v.size < 1:
        raise DataError("histogram needs at least one value")
    if labels is not None and len(labels) != v.size:
        raise DataError("label count does not match value count")
    if bins < 1:
        raise DataError("bins must be positive")
    lo, hi = _span(v)
    edges = np.linspace(lo, hi, bins + 1)
    groups = _class_order(labels) if labels is not None else ["all"]
    counts = []
    for c in groups:
        sel = v if labels is None else v[np.array([str(l) == c for l in labels])]
        counts.append(np.histogram(sel, bins=edges)[0])
    peak = max(1, int(max(np.max(c) for c in counts)))
    iw = width - 2 * _MARGIN
    ih = height - 2 * _MARGIN

    def sx(val):
        return _MARGIN + (val - lo) / (hi - lo) * iw

    def sy(count):
        return height - _MARGIN - count / peak * ih

    body = _axis_frame(width, height, x_label, "count", title)
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        tx = lo + frac * (hi - lo)
        body.append(
            f'<text x="{_fmt(sx(tx))}" y="{_fmt(height - _MARGIN + 16)}" text-anchor="middle" '
            f'font-size="10" fill="#555555">{_tick_label(tx)}</text>'
        )
        body.append(
            f'<text x="{_fmt(_MARGIN - 6)}" y="{_fmt(sy(frac * peak) + 3)}" text-anchor="end" '
            f'font-size="10" fill="#555555">{_tick_label(frac * peak)}</text>'
        )
    for gi, c in enumerate(counts):
        color = PALETTE[gi % len(PALETTE)]
        for b in range(bins):
            if c[b] == 0:
                continue
            x = sx(edges[b])
            w = sx(edges[b + 1]) - x
            y = sy(int(c[b]))
            body.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(w)}" '
                f'height="{_fmt(height - _MARGIN - y)}" fill="{color}" fill-opacity="0.55"/>'
            )
    if labels is not None:
        body.extend(_legend(groups, width))
    return _document(width, height, body)
