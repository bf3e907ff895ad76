"""Inference-side tooling: greedy NMS, COCO-style average precision, and a
misalignment metric for well-scored but poorly localized detections."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import Box, boxes_to_array, iou, pairwise_iou

COCO_IOU_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))
_RECALL_POINTS = np.linspace(0.0, 1.0, 101)

# COCO area bands: small < 32**2 <= medium < 96**2 <= large
AREA_BANDS = {
    "small": (0.0, 32.0**2),
    "medium": (32.0**2, 96.0**2),
    "large": (96.0**2, float("inf")),
}


@dataclass(frozen=True)
class Detection:
    box: Box
    class_id: int
    score: float
    image_id: object = 0

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


@dataclass(frozen=True)
class GroundTruth:
    box: Box
    class_id: int
    image_id: object = 0


@dataclass
class EvalResult:
    """AP averaged over the IoU thresholds, plus the per-threshold curve."""

    ap: float
    ap50: Optional[float]
    ap75: Optional[float]
    iou_thresholds: tuple[float, ...]
    per_threshold_ap: tuple[float, ...]
    ap_small: Optional[float] = None
    ap_medium: Optional[float] = None
    ap_large: Optional[float] = None

    def to_json_dict(self) -> dict:
        return {
            "format_version": 1,
            "ap": self.ap,
            "ap50": self.ap50,
            "ap75": self.ap75,
            "iou_thresholds": list(self.iou_thresholds),
            "per_threshold_ap": list(self.per_threshold_ap),
            "ap_small": self.ap_small,
            "ap_medium": self.ap_medium,
            "ap_large": self.ap_large,
        }


@dataclass
class MisalignmentResult:
    """Fraction of confident detections that localize poorly, plus per-
    detection flags aligned with the input order."""

    rate: float
    flags: list[bool]


def nms(dets: Sequence[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy per-class non-maximum suppression.

    Within each (image, class) group, repeatedly keep the highest-scored
    detection and drop the others whose IoU with it exceeds the threshold.
    Ties break on input index. The kept list is ordered by descending score,
    then input index.
    """
    if not dets:
        return []
    groups: dict[tuple, list[int]] = defaultdict(list)
    for i, det in enumerate(dets):
        groups[(det.image_id, det.class_id)].append(i)

    kept: list[int] = []
    for indices in groups.values():
        idx = np.asarray(indices)
        boxes = boxes_to_array([dets[i].box for i in indices])
        scores = np.asarray([dets[i].score for i in indices])
        order = np.lexsort((idx, -scores))
        alive = np.ones(idx.size, dtype=bool)
        for pos in range(idx.size):
            cur = order[pos]
            if not alive[cur]:
                continue
            kept.append(int(idx[cur]))
            rest = order[pos + 1 :]
            rest = rest[alive[rest]]
            if rest.size:
                overlaps = pairwise_iou(boxes[cur : cur + 1], boxes[rest])[0]
                alive[rest[overlaps > iou_threshold]] = False
    kept.sort(key=lambda i: (-dets[i].score, i))
    return [dets[i] for i in kept]


def _match_flags(
    dets: Sequence[Detection],
    det_order: Sequence[int],
    gts_by_image: dict[object, list[int]],
    gt_boxes: Sequence[Box],
    threshold: float,
) -> np.ndarray:
    """True-positive flags for detections of one class, in score order."""
    matched: set[int] = set()
    flags = np.zeros(len(det_order), dtype=bool)
    for rank, i in enumerate(det_order):
        det = dets[i]
        best_iou = 0.0
        best_gt = -1
        for g in gts_by_image.get(det.image_id, []):
            if g in matched:
                continue
            overlap = iou(det.box, gt_boxes[g])
            if overlap > best_iou:
                best_iou = overlap
                best_gt = g
        if best_gt >= 0 and best_iou >= threshold:
            matched.add(best_gt)
            flags[rank] = True
    return flags


def _ap_from_flags(flags: np.ndarray, n_gt: int) -> float:
    """101-point interpolated average precision from ordered match flags."""
    if n_gt == 0:
        return 0.0
    if flags.size == 0:
        return 0.0
    tp = np.cumsum(flags)
    fp = np.cumsum(~flags)
    recall = tp / n_gt
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, _RECALL_POINTS, side="left")
    valid = idx < envelope.size
    return float(np.where(valid, envelope[np.minimum(idx, envelope.size - 1)], 0.0).mean())


def _mean_ap_per_threshold(
    dets: Sequence[Detection],
    ground_truth: Sequence[GroundTruth],
    iou_thresholds: Sequence[float],
) -> list[float]:
    classes = sorted({g.class_id for g in ground_truth})
    gt_boxes = [g.box for g in ground_truth]

    per_class_orders: dict[int, list[int]] = {}
    per_class_gts: dict[int, dict[object, list[int]]] = {}
    for c in classes:
        order = [i for i, d in enumerate(dets) if d.class_id == c]
        order.sort(key=lambda i: (-dets[i].score, i))
        per_class_orders[c] = order
        by_image: dict[object, list[int]] = defaultdict(list)
        for g, gt in enumerate(ground_truth):
            if gt.class_id == c:
                by_image[gt.image_id].append(g)
        per_class_gts[c] = by_image

    results = []
    for threshold in iou_thresholds:
        class_aps = []
        for c in classes:
            n_gt = sum(len(v) for v in per_class_gts[c].values())
            flags = _match_flags(
                dets, per_class_orders[c], per_class_gts[c], gt_boxes, threshold
            )
            class_aps.append(_ap_from_flags(flags, n_gt))
        results.append(float(np.mean(class_aps)) if class_aps else 0.0)
    return results


def _band_filter(items, band: tuple[float, float]):
    low, high = band
    return [x for x in items if low <= x.box.width * x.box.height < high]


def average_precision(
    dets: Sequence[Detection],
    ground_truth: Sequence[GroundTruth],
    iou_thresholds: Sequence[float] = COCO_IOU_THRESHOLDS,
    area_bands: bool = False,
) -> EvalResult:
    """COCO-style average precision.

    Detections are processed in descending score order (ties to input index);
    each ground-truth object is matched at most once, to the detection
    overlapping it most. Per-class AP uses 101-point interpolated precision,
    classes are averaged, then thresholds. With ``area_bands``, AP is also
    reported with ground truth and detections restricted to the small /
    medium / large COCO area ranges.
    """
    if not ground_truth:
        raise ValueError("ground truth must be non-empty")
    per_threshold = _mean_ap_per_threshold(dets, ground_truth, iou_thresholds)
    thresholds = tuple(float(t) for t in iou_thresholds)
    by_value = dict(zip(thresholds, per_threshold))

    banded = {}
    if area_bands:
        for name, band in AREA_BANDS.items():
            band_gt = _band_filter(ground_truth, band)
            band_dets = _band_filter(dets, band)
            if band_gt:
                values = _mean_ap_per_threshold(band_dets, band_gt, iou_thresholds)
                banded[name] = float(np.mean(values))
            else:
                banded[name] = None

    return EvalResult(
        ap=float(np.mean(per_threshold)),
        ap50=by_value.get(0.5),
        ap75=by_value.get(0.75),
        iou_thresholds=thresholds,
        per_threshold_ap=tuple(per_threshold),
        ap_small=banded.get("small"),
        ap_medium=banded.get("medium"),
        ap_large=banded.get("large"),
    )


def misalignment_rate(
    dets: Sequence[Detection],
    ground_truth: Sequence[GroundTruth],
    loc_threshold: float = 0.75,
    score_threshold: float = 0.5,
) -> MisalignmentResult:
    """Fraction of confident detections that fail to localize their class.

    A detection with score >= ``score_threshold`` counts as misaligned when
    its best IoU against same-class, same-image ground truth falls below
    ``loc_threshold``. The rate is over confident detections only; it is 0.0
    when there are none.
    """
    flags = [False] * len(dets)
    confident = 0
    misaligned = 0
    for i, det in enumerate(dets):
        if det.score < score_threshold:
            continue
        confident += 1
        best = 0.0
        for gt in ground_truth:
            if gt.class_id == det.class_id and gt.image_id == det.image_id:
                best = max(best, iou(det.box, gt.box))
        if best < loc_threshold:
            misaligned += 1
            flags[i] = True
    rate = misaligned / confident if confident else 0.0
    return MisalignmentResult(rate=rate, flags=flags)
