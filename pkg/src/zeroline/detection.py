"""Bullet-hole detection on normalized targets.

Two sources behind one data type: a built-in classical blob detector
(dark compact regions on bright paper), and a JSON ingestion path for
externally produced detections, which is the seam where a learned
detector can plug in without this package linking any inference
runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage.measure import perimeter as region_perimeter

from .errors import FrameMismatchError, SchemaViolationError
from .geometry import BBox, Homography, iou, transform_bbox
from .segmentation import NormalizedTarget

BULLET_HOLE = "bullet_hole"
TARGET = "target"
_CLASSES = (BULLET_HOLE, TARGET)

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


@dataclass(frozen=True)
class Detection:
    """One detected object in the canonical frame.

    The class field is named cls here because of the Python keyword; it
    serializes as "class" in the Detection-File JSON.
    """

    bbox: BBox
    confidence: float
    cls: str = BULLET_HOLE

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")
        if self.cls not in _CLASSES:
            raise ValueError(f"unknown class {self.cls!r}")


@dataclass(frozen=True)
class BlobParams:
    # A 5.56 mm hole at 0.5 mm/px covers ~95 px^2; the area band brackets
    # that by roughly x3 both ways to admit torn or clipped holes.
    intensity_percentile: float = 5.0
    min_area: int = 30
    max_area: int = 900
    min_circularity: float = 0.55

    def __post_init__(self):
        if not 0.0 < self.intensity_percentile < 100.0:
            raise ValueError(
                f"intensity_percentile must be in (0, 100), got {self.intensity_percentile}"
            )
        if not self.min_area < self.max_area:
            raise ValueError(
                f"min_area {self.min_area} must be below max_area {self.max_area}"
            )
        if not 0.0 < self.min_circularity <= 1.0:
            raise ValueError(
                f"min_circularity must be in (0, 1], got {self.min_circularity}"
            )


def detect_blobs(norm: NormalizedTarget, params: BlobParams | None = None) -> list[Detection]:
    """Dark compact blobs in the normalized image, best-first.

    Pixels at or below the intensity percentile form the candidate
    mask; 8-connected components survive if their area lies within the
    configured band and their circularity 4*pi*A/P^2 clears the floor.
    Confidence is the circularity itself, the only ranking signal a
    classical detector has.
    """
    if params is None:
        params = BlobParams()
    px = norm.image.pixels
    threshold = np.percentile(px, params.intensity_percentile)
    mask = px <= threshold
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    detections: list[Detection] = []
    for index, (slice_y, slice_x) in enumerate(ndimage.find_objects(labels), start=1):
        region = labels[slice_y, slice_x] == index
        area = int(region.sum())
        if not params.min_area <= area <= params.max_area:
            continue
        boundary = region_perimeter(region)
        if boundary <= 0.0:
            continue
        circularity = min(1.0, 4.0 * math.pi * area / (boundary * boundary))
        if circularity < params.min_circularity:
            continue
        box = BBox(
            float(slice_x.start),
            float(slice_y.start),
            float(slice_x.stop),
            float(slice_y.stop),
        )
        detections.append(Detection(box, circularity, BULLET_HOLE))
    # Descending confidence; position breaks ties so order is reproducible.
    detections.sort(key=lambda d: (-d.confidence, d.bbox.y_min, d.bbox.x_min))
    return detections


def nms(dets: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy suppression: best-first, drop anything too close to a keeper."""
    if not 0.0 < iou_threshold <= 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    ranked = sorted(
        range(len(dets)), key=lambda i: (-dets[i].confidence, i)
    )
    kept: list[Detection] = []
    for i in ranked:
        candidate = dets[i]
        if any(
            k.cls == candidate.cls and iou(k.bbox, candidate.bbox) >= iou_threshold
            for k in kept
        ):
            continue
        kept.append(candidate)
    return kept


def serialize_detections(
    dets: list[Detection], image_ref: str, frame: str = "normalized"
) -> dict:
    """Detection-File document for a list of canonical-frame detections."""
    if frame not in ("raw", "normalized"):
        raise ValueError(f"frame must be 'raw' or 'normalized', got {frame!r}")
    return {
        "image": image_ref,
        "frame": frame,
        "detections": [
            {
                "class": d.cls,
                "bbox": d.bbox.as_list(),
                "confidence": d.confidence,
            }
            for d in dets
        ],
    }


def _require(doc: dict, field: str, kind, path: str):
    if field not in doc:
        raise SchemaViolationError(path + field, "missing required field")
    value = doc[field]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaViolationError(path + field, f"expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, kind):
        raise SchemaViolationError(
            path + field, f"expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _parse_bbox(values, path: str) -> BBox:
    if not isinstance(values, list) or len(values) != 4:
        raise SchemaViolationError(path, "bbox must be a list of 4 numbers")
    coords = []
    for i, v in enumerate(values):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaViolationError(f"{path}[{i}]", f"expected a number, got {v!r}")
        coords.append(float(v))
    if not (coords[0] < coords[2] and coords[1] < coords[3]):
        raise SchemaViolationError(path, f"degenerate box {coords}")
    return BBox(*coords)


def load_detections(
    doc: dict,
    homography_raw_to_canonical: Homography | None = None,
    canonical_size: int | None = None,
) -> list[Detection]:
    """Validate a Detection-File document and return canonical-frame detections.

    Documents in the raw frame are mapped through the supplied
    homography; asking for that without one is a frame mismatch, not a
    schema problem.
    """
    if not isinstance(doc, dict):
        raise SchemaViolationError("$", "document must be a JSON object")
    _require(doc, "image", str, "")
    frame = _require(doc, "frame", str, "")
    if frame not in ("raw", "normalized"):
        raise SchemaViolationError("frame", f"must be 'raw' or 'normalized', got {frame!r}")
    if frame == "raw" and homography_raw_to_canonical is None:
        raise FrameMismatchError(
            "detections are in the raw frame but no homography is available"
        )
    entries = _require(doc, "detections", list, "")

    detections: list[Detection] = []
    for i, entry in enumerate(entries):
        path = f"detections[{i}]."
        if not isinstance(entry, dict):
            raise SchemaViolationError(f"detections[{i}]", "entry must be an object")
        cls = _require(entry, "class", str, path)
        if cls not in _CLASSES:
            raise SchemaViolationError(
                path + "class", f"must be one of {list(_CLASSES)}, got {cls!r}"
            )
        confidence = _require(entry, "confidence", float, path)
        if not 0.0 <= confidence <= 1.0:
            raise SchemaViolationError(
                path + "confidence", f"must be in [0, 1], got {confidence}"
            )
        box = _parse_bbox(entry.get("bbox"), path + "bbox")
        if frame == "raw":
            box = transform_bbox(homography_raw_to_canonical, box)
        if canonical_size is not None:
            size = float(canonical_size)
            x_min = max(0.0, min(box.x_min, size))
            y_min = max(0.0, min(box.y_min, size))
            x_max = max(0.0, min(box.x_max, size))
            y_max = max(0.0, min(box.y_max, size))
            if x_min >= x_max or y_min >= y_max:
                raise SchemaViolationError(
                    path + "bbox", "box lies outside the canonical frame"
                )
            box = BBox(x_min, y_min, x_max, y_max)
        detections.append(Detection(box, confidence, cls))
    return detections
