"""Minimal COCO-style annotation and detection file ingest.

Annotation files carry three arrays: ``images`` (id, width, height),
``annotations`` (image_id, bbox as [x, y, width, height], category_id) and
``categories`` (id, name). bbox converts to (x, y, x+w, y+h) at this boundary.
Detection files are a flat array of {image_id, category_id, bbox, score}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .evaluation import Detection
from .geometry import Box


class AnnotationError(Exception):
    """Raised when an annotation or detection file fails to parse."""


@dataclass
class ImageAnnotations:
    image_id: object
    width: int
    height: int
    boxes: list[Box] = field(default_factory=list)
    class_ids: list[int] = field(default_factory=list)


def _require(record: dict, key: str, where: str):
    if key not in record:
        raise AnnotationError(f"{where}: missing required field {key!r} in {record!r}")
    return record[key]


def _bbox_to_box(bbox, where: str) -> Box:
    if not isinstance(bbox, (list, tuple)) or len(bbox) != 4:
        raise AnnotationError(f"{where}: bbox must be [x, y, width, height], got {bbox!r}")
    x, y, w, h = (float(v) for v in bbox)
    if w <= 0 or h <= 0:
        raise AnnotationError(f"{where}: bbox width/height must be positive, got {bbox!r}")
    return Box(x, y, x + w, y + h)


def load_annotations(path) -> tuple[list[ImageAnnotations], dict[int, str]]:
    """Parse an annotation file into per-image ground truth.

    Returns the images in file order (including images without annotations)
    and the category id -> name mapping.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise AnnotationError(f"{path}: expected a JSON object at the top level")

    images: dict[object, ImageAnnotations] = {}
    for k, record in enumerate(data.get("images", [])):
        where = f"{path}: images[{k}]"
        image_id = _require(record, "id", where)
        width = int(_require(record, "width", where))
        height = int(_require(record, "height", where))
        if image_id in images:
            raise AnnotationError(f"{where}: duplicate image id {image_id!r}")
        if width <= 0 or height <= 0:
            raise AnnotationError(f"{where}: image dimensions must be positive")
        images[image_id] = ImageAnnotations(image_id=image_id, width=width, height=height)
    if not images:
        raise AnnotationError(f"{path}: no images")

    for k, record in enumerate(data.get("annotations", [])):
        where = f"{path}: annotations[{k}]"
        image_id = _require(record, "image_id", where)
        if image_id not in images:
            raise AnnotationError(f"{where}: unknown image id {image_id!r}")
        box = _bbox_to_box(_require(record, "bbox", where), where)
        category = int(_require(record, "category_id", where))
        images[image_id].boxes.append(box)
        images[image_id].class_ids.append(category)

    categories = {}
    for k, record in enumerate(data.get("categories", [])):
        where = f"{path}: categories[{k}]"
        categories[int(_require(record, "id", where))] = str(record.get("name", ""))
    return list(images.values()), categories


def load_detections(path, known_image_ids) -> list[Detection]:
    """Parse a detection results file; every image id must be known."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise AnnotationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, list):
        raise AnnotationError(f"{path}: expected a JSON array of detections")

    known = set(known_image_ids)
    unknown = sorted(
        {r.get("image_id") for r in data if isinstance(r, dict)} - known,
        key=repr,
    )
    if unknown:
        raise AnnotationError(f"{path}: detections reference unknown image ids: {unknown}")

    dets = []
    for k, record in enumerate(data):
        where = f"{path}: detections[{k}]"
        if not isinstance(record, dict):
            raise AnnotationError(f"{where}: expected an object, got {record!r}")
        image_id = _require(record, "image_id", where)
        box = _bbox_to_box(_require(record, "bbox", where), where)
        score = float(_require(record, "score", where))
        if not 0.0 <= score <= 1.0:
            raise AnnotationError(f"{where}: score must lie in [0, 1], got {score}")
        dets.append(
            Detection(
                box=box,
                class_id=int(_require(record, "category_id", where)),
                score=score,
                image_id=image_id,
            )
        )
    return dets
