"""Independent reference implementations used only to check the library.

These deliberately avoid the library's vectorized code paths: the
rasterization oracle counts pixels, the NMS oracle is a direct O(n^2) loop,
and the AP oracle walks the precision/recall curve literally.
"""

import numpy as np

from boxmatch.geometry import Box, iou


def rasterized_iou(a: Box, b: Box, canvas: int = 64) -> float:
    """Pixel-counting IoU for integer-coordinate boxes on a small canvas.

    A pixel (i, j) belongs to a box when x_min <= i < x_max and
    y_min <= j < y_max, matching the continuous (max - min) area convention.
    """
    xs = np.arange(canvas)
    ys = np.arange(canvas)
    gx, gy = np.meshgrid(xs, ys, indexing="xy")

    def mask(box: Box) -> np.ndarray:
        return (gx >= box.x_min) & (gx < box.x_max) & (gy >= box.y_min) & (gy < box.y_max)

    ma, mb = mask(a), mask(b)
    inter = np.count_nonzero(ma & mb)
    union = np.count_nonzero(ma | mb)
    return inter / union


def brute_force_nms(dets, threshold: float):
    """Reference greedy NMS: repeated linear scans, scalar IoU calls."""
    remaining = list(range(len(dets)))
    kept = []
    while remaining:
        best = remaining[0]
        for i in remaining[1:]:
            if dets[i].score > dets[best].score:
                best = i
        kept.append(best)
        remaining.remove(best)
        survivors = []
        for i in remaining:
            same_group = (
                dets[i].class_id == dets[best].class_id
                and dets[i].image_id == dets[best].image_id
            )
            if same_group and iou(dets[i].box, dets[best].box) > threshold:
                continue
            survivors.append(i)
        remaining = survivors
    return [dets[i] for i in kept]


def brute_force_ap_at_threshold(dets, gts, threshold: float) -> float:
    """Reference single-class, single-threshold 101-point AP.

    Matches detections in score order against unmatched ground truth by a
    plain double loop, then evaluates max-precision-at-recall>=r literally at
    each of the 101 recall points.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    matched = set()
    flags = []
    for i in order:
        best_iou, best_g = 0.0, None
        for g, gt in enumerate(gts):
            if g in matched or gt.class_id != dets[i].class_id:
                continue
            if gt.image_id != dets[i].image_id:
                continue
            value = iou(dets[i].box, gt.box)
            if value > best_iou:
                best_iou, best_g = value, g
        if best_g is not None and best_iou >= threshold:
            matched.add(best_g)
            flags.append(True)
        else:
            flags.append(False)

    n_gt = len(gts)
    precisions, recalls = [], []
    tp = fp = 0
    for flag in flags:
        tp += flag
        fp += not flag
        precisions.append(tp / (tp + fp))
        recalls.append(tp / n_gt)

    total = 0.0
    for r in np.linspace(0, 1, 101):
        best = 0.0
        for p, rec in zip(precisions, recalls):
            if rec >= r and p > best:
                best = p
        total += best
    return total / 101
