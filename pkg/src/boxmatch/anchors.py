"""Deterministic multi-level anchor grids and per-pixel point grids.

Anchor ordering is fixed: levels in spec order, then grid rows top-to-bottom,
columns left-to-right, then scale, then aspect ratio. Anchors are not clipped
to the image; their centers always lie inside it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Box


@dataclass(frozen=True)
class LevelSpec:
    """One detection level: grid stride plus the anchor shapes placed per cell.

    An anchor with scale ``s`` and aspect ratio ``r`` has width ``s * sqrt(r)``
    and height ``s / sqrt(r)``, so its area is ``s**2`` for every ratio.
    """

    stride: int
    scales: tuple[float, ...]
    aspect_ratios: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))
        object.__setattr__(
            self, "aspect_ratios", tuple(float(r) for r in self.aspect_ratios)
        )
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if not self.scales or any(s <= 0 for s in self.scales):
            raise ValueError(f"scales must be non-empty and positive, got {self.scales}")
        if not self.aspect_ratios or any(r <= 0 for r in self.aspect_ratios):
            raise ValueError(
                f"aspect ratios must be non-empty and positive, got {self.aspect_ratios}"
            )


# Compact stand-in for an SSD/RFBNet-style layout on a 320x320 input; any
# other layout can be supplied through AnchorGridSpec.
DEFAULT_LEVELS = (
    LevelSpec(stride=8, scales=(32.0,), aspect_ratios=(1.0, 2.0, 0.5)),
    LevelSpec(stride=16, scales=(64.0, 128.0), aspect_ratios=(1.0, 2.0, 0.5)),
    LevelSpec(stride=32, scales=(256.0,), aspect_ratios=(1.0, 2.0, 0.5)),
)


@dataclass(frozen=True)
class AnchorGridSpec:
    """Image resolution plus the ordered list of detection levels."""

    image_width: int = 320
    image_height: int = 320
    levels: tuple[LevelSpec, ...] = DEFAULT_LEVELS

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise ValueError("at least one level is required")
        if self.image_width < 1 or self.image_height < 1:
            raise ValueError("image dimensions must be positive")
        for level in self.levels:
            if self.image_width % level.stride or self.image_height % level.stride:
                raise ValueError(
                    f"image {self.image_width}x{self.image_height} is not divisible "
                    f"by stride {level.stride}"
                )


@dataclass
class AnchorSet:
    """Flat anchor list with per-level index ranges and a packed (N, 4) array."""

    boxes: tuple[Box, ...]
    level_offsets: tuple[tuple[int, int], ...]
    array: np.ndarray

    def __len__(self) -> int:
        return len(self.boxes)


@dataclass(frozen=True)
class GridPoint:
    """A per-pixel sample location with its level's object-size range."""

    x: float
    y: float
    level: int
    scale_range: tuple[float, float]
    stride: int


@dataclass
class PointSet:
    """Flat point list mirroring AnchorSet ordering, plus packed arrays."""

    points: tuple[GridPoint, ...]
    level_offsets: tuple[tuple[int, int], ...]
    xy: np.ndarray
    point_levels: np.ndarray
    point_strides: np.ndarray
    scale_ranges: tuple[tuple[float, float], ...]

    def __len__(self) -> int:
        return len(self.points)


def _level_centers(spec: AnchorGridSpec, level: LevelSpec) -> tuple[np.ndarray, np.ndarray]:
    cols = spec.image_width // level.stride
    rows = spec.image_height // level.stride
    cx = (np.arange(cols, dtype=np.float64) + 0.5) * level.stride
    cy = (np.arange(rows, dtype=np.float64) + 0.5) * level.stride
    return cx, cy


def generate_anchors(spec: AnchorGridSpec) -> AnchorSet:
    """Generate the full anchor list for a grid spec.

    The total count is sum over levels of
    (W/stride) * (H/stride) * len(scales) * len(aspect_ratios).
    """
    arrays = []
    offsets = []
    start = 0
    for level in spec.levels:
        cx, cy = _level_centers(spec, level)
        widths = []
        heights = []
        for s in level.scales:
            for r in level.aspect_ratios:
                root = math.sqrt(r)
                widths.append(s * root)
                heights.append(s / root)
        w = np.asarray(widths)
        h = np.asarray(heights)
        # broadcast to (rows, cols, shapes); C-order reshape keeps the
        # row -> column -> (scale, ratio) ordering
        gx = cx[None, :, None]
        gy = cy[:, None, None]
        level_boxes = np.stack(
            np.broadcast_arrays(gx - w / 2, gy - h / 2, gx + w / 2, gy + h / 2),
            axis=-1,
        ).reshape(-1, 4)
        arrays.append(level_boxes)
        offsets.append((start, start + level_boxes.shape[0]))
        start += level_boxes.shape[0]
    array = np.concatenate(arrays, axis=0)
    boxes = tuple(Box(*row) for row in array)
    return AnchorSet(boxes=boxes, level_offsets=tuple(offsets), array=array)


def level_scale_ranges(spec: AnchorGridSpec) -> tuple[tuple[float, float], ...]:
    """Half-open [lower, upper) object-size ranges, one per level.

    Level boundaries come from consecutive level scales: level l's upper bound
    is the smallest scale of level l+1; the first lower bound is 0 and the last
    upper bound is infinite. An object belongs to the level whose range
    contains max(width, height).
    """
    lowers = [0.0] + [min(level.scales) for level in spec.levels[1:]]
    uppers = lowers[1:] + [math.inf]
    return tuple(zip(lowers, uppers))


def generate_points(spec: AnchorGridSpec) -> PointSet:
    """Generate one point per grid cell per level, at cell centers."""
    ranges = level_scale_ranges(spec)
    points: list[GridPoint] = []
    offsets = []
    xy = []
    levels = []
    strides = []
    start = 0
    for idx, level in enumerate(spec.levels):
        cx, cy = _level_centers(spec, level)
        for y in cy:
            for x in cx:
                points.append(
                    GridPoint(
                        x=float(x),
                        y=float(y),
                        level=idx,
                        scale_range=ranges[idx],
                        stride=level.stride,
                    )
                )
                xy.append((x, y))
                levels.append(idx)
                strides.append(level.stride)
        offsets.append((start, len(points)))
        start = len(points)
    return PointSet(
        points=tuple(points),
        level_offsets=tuple(offsets),
        xy=np.asarray(xy, dtype=np.float64),
        point_levels=np.asarray(levels, dtype=np.int64),
        point_strides=np.asarray(strides, dtype=np.float64),
        scale_ranges=ranges,
    )
