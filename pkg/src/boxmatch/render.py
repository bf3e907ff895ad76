"""Deterministic SVG renderings of label-assignment differences.

Ground truth is drawn as dashed white boxes on a dark canvas; each strategy's
positives are outlined (anchors) or dotted (points) in the conventional
colors: red for the static baseline, yellow for localization-guided
classification labels, green for classification-guided localization labels.
The output embeds no timestamps, so identical inputs give identical bytes.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .geometry import Box

STRATEGY_COLORS = {
    "static": "#e53935",
    "l2c": "#fdd835",
    "c2l": "#43a047",
}

_BACKGROUND = "#1c1f26"


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _rect(box: Box, color: str, width: float, dash: str = "") -> str:
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<rect x="{_fmt(box.x_min)}" y="{_fmt(box.y_min)}" '
        f'width="{_fmt(box.width)}" height="{_fmt(box.height)}" '
        f'fill="none" stroke="{color}" stroke-width="{_fmt(width)}"{dash_attr}/>'
    )


def _dot(x: float, y: float, color: str, radius: float) -> str:
    return (
        f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="{_fmt(radius)}" '
        f'fill="{color}" stroke="none"/>'
    )


def render_assignment_svg(
    image_width: int,
    image_height: int,
    gt_boxes: Sequence[Box],
    box_layers: Sequence[tuple[str, Sequence[Box]]] = (),
    point_layers: Sequence[tuple[str, Iterable[tuple[float, float]]]] = (),
) -> str:
    """Render GT plus per-strategy positives; 1 SVG unit = 1 image pixel.

    ``box_layers`` and ``point_layers`` pair a color with the positive anchor
    boxes / point coordinates of one strategy.
    """
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{image_width}" '
        f'height="{image_height}" viewBox="0 0 {image_width} {image_height}">',
        f'<rect x="0" y="0" width="{image_width}" height="{image_height}" '
        f'fill="{_BACKGROUND}"/>',
    ]
    for color, boxes in box_layers:
        for box in boxes:
            parts.append(_rect(box, color, width=1.0))
    for color, points in point_layers:
        for x, y in points:
            parts.append(_dot(x, y, color, radius=2.0))
    for box in gt_boxes:
        parts.append(_rect(box, "#ffffff", width=1.5, dash="6 4"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
