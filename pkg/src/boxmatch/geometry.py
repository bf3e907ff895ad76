"""Axis-aligned box arithmetic: areas, IoU, and batched IoU matrices.

Boxes are (x_min, y_min, x_max, y_max) in continuous pixel coordinates with
area (x_max - x_min) * (y_max - y_min). Degenerate boxes are rejected at
construction rather than clamped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in pixel coordinates (sub-pixel allowed)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        coords = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(c) for c in coords):
            raise ValueError(f"box coordinates must be finite, got {coords}")
        if self.x_max <= self.x_min or self.y_max <= self.y_min:
            raise ValueError(f"box must have strictly positive extent, got {coords}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


BoxesLike = Union[np.ndarray, Sequence[Box]]


def area(box: Box) -> float:
    """Area of a box in square pixels."""
    return box.width * box.height


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint."""
    iw = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    ih = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    # box invariants guarantee union > 0, no epsilon needed
    return inter / (area(a) + area(b) - inter)


def boxes_to_array(boxes: Iterable[Box]) -> np.ndarray:
    """Pack boxes into an (N, 4) float64 array of (x_min, y_min, x_max, y_max)."""
    arr = np.asarray([b.as_tuple() for b in boxes], dtype=np.float64)
    return arr.reshape(-1, 4)


def _as_box_array(boxes: BoxesLike) -> np.ndarray:
    if isinstance(boxes, np.ndarray):
        arr = np.asarray(boxes, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ValueError(f"box array must have shape (N, 4), got {arr.shape}")
        if arr.size and not (
            np.isfinite(arr).all()
            and np.all(arr[:, 2] > arr[:, 0])
            and np.all(arr[:, 3] > arr[:, 1])
        ):
            raise ValueError("box array contains non-finite or zero-extent boxes")
        return arr
    return boxes_to_array(boxes)


def pairwise_iou(a: BoxesLike, b: BoxesLike) -> np.ndarray:
    """IoU between every box in `a` and every box in `b`; shape (len(a), len(b))."""
    a = _as_box_array(a)
    b = _as_box_array(b)
    lt = np.maximum(a[:, None, :2], b[None, :, :2])
    rb = np.minimum(a[:, None, 2:], b[None, :, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return inter / union


@dataclass(frozen=True)
class IoUMatrix:
    """Unit-interval overlap values, rows = anchors/points, cols = objects."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"IoU matrix must be 2-dimensional, got shape {arr.shape}")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("IoU matrix values must lie in [0, 1]")
        object.__setattr__(self, "values", arr)

    @property
    def row_count(self) -> int:
        return self.values.shape[0]

    @property
    def col_count(self) -> int:
        return self.values.shape[1]


def iou_matrix(anchors: BoxesLike, objects: BoxesLike) -> IoUMatrix:
    """Pairwise IoU between anchors and ground-truth objects.

    Entry (i, j) equals ``iou(anchors[i], objects[j])``; ordering follows the
    input order. Raises ValueError on an empty anchor or object list.
    """
    a = _as_box_array(anchors)
    b = _as_box_array(objects)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError(
            f"degenerate scene: need at least one anchor and one object, "
            f"got {a.shape[0]} anchors and {b.shape[0]} objects"
        )
    return IoUMatrix(pairwise_iou(a, b))
