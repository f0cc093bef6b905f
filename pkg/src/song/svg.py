"""Static SVG scatter plots of 2-d embeddings."""
from xml.sax.saxutils import escape

import numpy as np

from .model import ValidationError

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939",
)

PLOT_SIZE = 600.0
LEGEND_WIDTH = 140.0


def _num(v):
    return format(float(v), ".6g")


def label_colors(labels):
    """Map each distinct label, in ascending order, onto the palette cyclically."""
    return {lab: PALETTE[i % len(PALETTE)] for i, lab in enumerate(np.unique(labels).tolist())}


def scatter_svg(points, labels=None, point_size=3.0, color_by_label=True):
    """Render ``points`` (N x 2) as an SVG document string.

    The data are drawn inside a nested ``<svg>`` whose viewBox is the data
    bounding box widened by 5% of its extent on each side; y is flipped so
    that larger values are drawn higher. With labels, each distinct label gets
    a palette colour and a legend entry. Output depends only on the inputs.
    """
    P = np.asarray(points, dtype=np.float64)
    if P.ndim != 2 or P.shape[1] != 2:
        raise ValidationError(f"scatter plots need 2-d points, got shape {P.shape}")
    if not np.all(np.isfinite(P)):
        raise ValidationError("points contain NaN or Inf")
    if point_size <= 0:
        raise ValidationError("point size must be positive")
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (P.shape[0],):
            raise ValidationError("labels must match the number of points")

    if P.shape[0]:
        lo = P.min(axis=0)
        hi = P.max(axis=0)
    else:
        lo = np.zeros(2)
        hi = np.ones(2)
    span = hi - lo
    span[span == 0] = 1.0
    x0 = lo[0] - 0.05 * span[0]
    y0 = -hi[1] - 0.05 * span[1]
    w = 1.1 * span[0]
    h = 1.1 * span[1]
    # radius in data units, so that it is point_size pixels at the rendered size
    r = point_size * max(w, h) / PLOT_SIZE

    legend = labels is not None and color_by_label
    colors = label_colors(labels) if legend else {}
    total_w = PLOT_SIZE + (LEGEND_WIDTH if legend else 0.0)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_num(total_w)}" '
        f'height="{_num(PLOT_SIZE)}" viewBox="0 0 {_num(total_w)} {_num(PLOT_SIZE)}">',
        f'<rect x="0" y="0" width="{_num(total_w)}" height="{_num(PLOT_SIZE)}" fill="white"/>',
        f'<svg x="0" y="0" width="{_num(PLOT_SIZE)}" height="{_num(PLOT_SIZE)}" '
        f'viewBox="{_num(x0)} {_num(y0)} {_num(w)} {_num(h)}" preserveAspectRatio="xMidYMid meet">',
    ]
    for i in range(P.shape[0]):
        fill = colors[labels[i].item()] if legend else PALETTE[0]
        out.append(f'<circle cx="{_num(P[i, 0])}" cy="{_num(-P[i, 1])}" r="{_num(r)}" '
                   f'fill="{fill}" fill-opacity="0.8"/>')
    out.append("</svg>")
    if legend:
        out.append('<g class="legend" font-family="sans-serif" font-size="12">')
        for j, (lab, color) in enumerate(colors.items()):
            y = 20 + 18 * j
            out.append(f'<rect x="{_num(PLOT_SIZE + 12)}" y="{_num(y - 10)}" width="12" '
                       f'height="12" fill="{color}"/>')
            out.append(f'<text x="{_num(PLOT_SIZE + 30)}" y="{_num(y)}">{escape(str(lab))}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
