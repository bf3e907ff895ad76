"""Label assignment strategies for box detectors: static overlap matching,
prediction-guided re-ranking for both tasks, anchor-free point variants, plus
the anchor grids, NMS, AP evaluation and trajectory simulator used to study
them without training a network."""

from .anchors import (
    AnchorGridSpec,
    AnchorSet,
    GridPoint,
    LevelSpec,
    PointSet,
    generate_anchors,
    generate_points,
    level_scale_ranges,
)
from .assignment import (
    IGNORED,
    NEGATIVE,
    Assignment,
    DynamicLabels,
    MatchingConfig,
    amplified_iou,
    classify_to_localize,
    localize_to_classify,
    mutual_guidance_assign,
    static_assign,
)
from .evaluation import (
    COCO_IOU_THRESHOLDS,
    Detection,
    EvalResult,
    GroundTruth,
    MisalignmentResult,
    average_precision,
    misalignment_rate,
    nms,
)
from .fcos import (
    PointAssignment,
    centerness,
    fcos_assign_original,
    fcos_classify_to_localize,
    fcos_localize_to_classify,
)
from .geometry import Box, IoUMatrix, area, boxes_to_array, iou, iou_matrix, pairwise_iou
from .simulator import (
    Scene,
    SceneSpec,
    TrajectoryConfig,
    TrajectoryResult,
    TrajectorySnapshot,
    detections_from_snapshot,
    ground_truth_from_scene,
    run_trajectory,
    synth_point_predictions,
    synth_predictions,
    synth_scene,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorGridSpec",
    "AnchorSet",
    "Assignment",
    "Box",
    "COCO_IOU_THRESHOLDS",
    "Detection",
    "DynamicLabels",
    "EvalResult",
    "GridPoint",
    "GroundTruth",
    "IGNORED",
    "IoUMatrix",
    "LevelSpec",
    "MatchingConfig",
    "MisalignmentResult",
    "NEGATIVE",
    "PointAssignment",
    "PointSet",
    "Scene",
    "SceneSpec",
    "TrajectoryConfig",
    "TrajectoryResult",
    "TrajectorySnapshot",
    "amplified_iou",
    "area",
    "average_precision",
    "boxes_to_array",
    "centerness",
    "classify_to_localize",
    "detections_from_snapshot",
    "fcos_assign_original",
    "fcos_classify_to_localize",
    "fcos_localize_to_classify",
    "generate_anchors",
    "generate_points",
    "ground_truth_from_scene",
    "iou",
    "iou_matrix",
    "level_scale_ranges",
    "localize_to_classify",
    "misalignment_rate",
    "mutual_guidance_assign",
    "nms",
    "pairwise_iou",
    "run_trajectory",
    "static_assign",
    "synth_point_predictions",
    "synth_predictions",
    "synth_scene",
]
