"""Register target photos, find bullet holes, and track them across firing iterations."""

from .analytics import Adjustment, GroupStats, group_stats, mm_per_moa, sight_adjustment
from .detection import (
    BlobParams,
    Detection,
    detect_blobs,
    load_detections,
    nms,
    serialize_detections,
)
from .errors import ZerolineError
from .geometry import (
    BBox,
    Homography,
    estimate_homography_dlt,
    iou,
    ransac_homography,
    transform_bbox,
)
from .imagecore import GrayImage, Point2, load_image, load_pgm, save_pgm, warp_perspective
from .metrics import (
    EvalReport,
    ImageEval,
    average_precision,
    compile_report,
    full_pipeline_accuracy,
    iteration_classification_accuracy,
    mean_ap,
)
from .segmentation import (
    NormalizedTarget,
    TargetTemplate,
    build_template,
    load_template,
    save_template,
    segment,
)
from .session import ClickConfig, Session, append_iteration, create_session, load_session, save_session
from .synthgen import GroundTruth, SequenceSpec, generate_sequence, render_template
from .tracking import IterationRecord, MatchResult, jaccard_index, label_session, match_iterations

__version__ = "0.1.0"

__all__ = [
    "Adjustment",
    "BBox",
    "BlobParams",
    "ClickConfig",
    "Detection",
    "EvalReport",
    "GrayImage",
    "GroundTruth",
    "GroupStats",
    "Homography",
    "ImageEval",
    "IterationRecord",
    "MatchResult",
    "NormalizedTarget",
    "Point2",
    "SequenceSpec",
    "Session",
    "TargetTemplate",
    "ZerolineError",
    "append_iteration",
    "average_precision",
    "build_template",
    "compile_report",
    "create_session",
    "detect_blobs",
    "estimate_homography_dlt",
    "full_pipeline_accuracy",
    "generate_sequence",
    "group_stats",
    "iou",
    "iteration_classification_accuracy",
    "jaccard_index",
    "label_session",
    "load_detections",
    "load_image",
    "load_pgm",
    "load_session",
    "load_template",
    "match_iterations",
    "mean_ap",
    "mm_per_moa",
    "nms",
    "ransac_homography",
    "render_template",
    "save_pgm",
    "save_session",
    "save_template",
    "segment",
    "serialize_detections",
    "sight_adjustment",
    "transform_bbox",
    "warp_perspective",
]
