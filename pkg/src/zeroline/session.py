"""Zeroing session lifecycle: an append-only JSON record of iterations.

A session file is the durable result of a shooting session: which target
template, which distance, and one record per firing iteration with its
detections, new-hole split, group statistics, and the recommended sight
adjustment. Writes are temp-file-then-rename so an interrupted save can
never corrupt the previous state.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .analytics import Adjustment, GroupStats, group_stats, sight_adjustment
from .detection import Detection, detect_blobs, load_detections
from .errors import InvalidConfigError, SchemaViolationError
from .geometry import BBox, Homography
from .imagecore import GrayImage, Point2
from .segmentation import TargetTemplate, segment
from .tracking import (
    DEFAULT_MATCH_THRESHOLD,
    IterationRecord,
    match_iterations,
)


@dataclass(frozen=True)
class ClickConfig:
    """MOA moved per click of the windage / elevation turrets."""

    windage_moa_per_click: float = 0.5
    elevation_moa_per_click: float = 0.5

    def __post_init__(self):
        if self.windage_moa_per_click <= 0 or self.elevation_moa_per_click <= 0:
            raise InvalidConfigError(
                f"click values must be positive, got {self.windage_moa_per_click}"
                f"/{self.elevation_moa_per_click} MOA per click"
            )


@dataclass
class Session:
    session_id: str
    template_ref: str
    distance_m: float
    click_config: ClickConfig
    aim_point: Point2
    iterations: list[IterationRecord] = field(default_factory=list)


def create_session(
    path: str | Path,
    session_id: str,
    template_ref: str,
    distance_m: float,
    aim_point: Point2,
    click_config: ClickConfig | None = None,
) -> Session:
    """New empty session, persisted immediately."""
    if distance_m <= 0:
        raise InvalidConfigError(f"distance_m must be positive, got {distance_m}")
    session = Session(
        session_id=session_id,
        template_ref=str(template_ref),
        distance_m=float(distance_m),
        click_config=click_config or ClickConfig(),
        aim_point=Point2(float(aim_point[0]), float(aim_point[1])),
    )
    save_session(session, path)
    return session


def append_iteration(
    session: Session,
    raw_image: GrayImage,
    template: TargetTemplate,
    *,
    path: str | Path,
    detections: list[Detection] | dict | None = None,
    threshold: float = DEFAULT_MATCH_THRESHOLD,
    image_ref: str = "",
) -> IterationRecord:
    """Register, detect, split new-vs-prior, score; append and persist.

    detections may be a ready canonical-frame list, a parsed
    Detection-File document (mapped into the canonical frame with this
    iteration's homography), or None for the built-in blob detector.
    Segmentation failure propagates before the session is touched, so
    the file on disk stays byte-identical.
    """
    norm = segment(raw_image, template)
    if detections is None:
        dets = detect_blobs(norm)
    elif isinstance(detections, dict):
        dets = load_detections(
            detections,
            homography_raw_to_canonical=norm.homography_raw_to_canonical,
            canonical_size=template.canonical_size,
        )
    else:
        dets = list(detections)

    accumulated: list[Detection] = []
    for record in session.iterations:
        accumulated.extend(record.detections)
    if session.iterations:
        new_indices = match_iterations(accumulated, dets, threshold).new_indices
    else:
        new_indices = list(range(len(dets)))

    new_holes = [dets[i] for i in new_indices]
    stats: GroupStats | None = None
    adjustment: Adjustment | None = None
    if new_holes:
        stats = group_stats(new_holes, template.mm_per_pixel)
        adjustment = sight_adjustment(
            stats.center_px,
            session.aim_point,
            template.mm_per_pixel,
            session.distance_m,
            session.click_config.windage_moa_per_click,
            session.click_config.elevation_moa_per_click,
        )

    record = IterationRecord(
        index=len(session.iterations) + 1,
        image_ref=image_ref,
        detections=dets,
        new_hole_indices=new_indices,
        group_stats=stats,
        adjustment=adjustment,
        homography=norm.homography_raw_to_canonical,
        used_fallback=norm.used_fallback,
    )
    session.iterations.append(record)
    try:
        save_session(session, path)
    except BaseException:
        session.iterations.pop()
        raise
    return record


def _detection_to_json(det: Detection) -> dict:
    return {
        "class": det.cls,
        "bbox": det.bbox.as_list(),
        "confidence": det.confidence,
    }


def _record_to_json(record: IterationRecord) -> dict:
    stats = record.group_stats
    adjustment = record.adjustment
    return {
        "index": record.index,
        "image_ref": record.image_ref,
        "detections": [_detection_to_json(d) for d in record.detections],
        "new_hole_indices": list(record.new_hole_indices),
        "group_stats": None
        if stats is None
        else {
            "center_px": [stats.center_px.x, stats.center_px.y],
            "center_mm": [stats.center_mm.x, stats.center_mm.y],
            "extreme_spread_mm": stats.extreme_spread_mm,
            "mean_radius_mm": stats.mean_radius_mm,
            "count": stats.count,
        },
        "adjustment": None
        if adjustment is None
        else {
            "windage_clicks": adjustment.windage_clicks,
            "elevation_clicks": adjustment.elevation_clicks,
            "residual_mm": list(adjustment.residual_mm),
        },
        "homography": None
        if record.homography is None
        else record.homography.as_flat_list(),
        "used_fallback": record.used_fallback,
    }


def _session_to_json(session: Session) -> dict:
    return {
        "session_id": session.session_id,
        "template_ref": session.template_ref,
        "distance_m": session.distance_m,
        "click_config": {
            "windage_moa_per_click": session.click_config.windage_moa_per_click,
            "elevation_moa_per_click": session.click_config.elevation_moa_per_click,
        },
        "aim_point": [session.aim_point.x, session.aim_point.y],
        "iterations": [_record_to_json(r) for r in session.iterations],
    }


def save_session(session: Session, path: str | Path) -> None:
    """Atomic write: payload to a sibling temp file, then rename over."""
    path = Path(path)
    payload = json.dumps(_session_to_json(session), indent=2) + "\n"
    fd, tmp_name = tempfile.mkstemp(
        dir=path.parent if str(path.parent) else ".",
        prefix=path.name + ".",
        suffix=".tmp",
    )
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def _require(doc: dict, name: str, kind, path: str):
    if not isinstance(doc, dict) or name not in doc:
        raise SchemaViolationError(path + name, "missing required field")
    value = doc[name]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaViolationError(path + name, f"expected number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaViolationError(path + name, f"expected integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise SchemaViolationError(
            path + name, f"expected {kind.__name__}, got {type(value).__name__}"
        )
    return value


def _point_from(doc: dict, name: str, path: str) -> Point2:
    raw = _require(doc, name, list, path)
    if len(raw) != 2 or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in raw
    ):
        raise SchemaViolationError(path + name, "expected [x, y] numbers")
    return Point2(float(raw[0]), float(raw[1]))


def _detection_from_json(doc: dict, path: str) -> Detection:
    cls = _require(doc, "class", str, path)
    raw_box = _require(doc, "bbox", list, path)
    confidence = _require(doc, "confidence", float, path)
    if len(raw_box) != 4 or any(
        isinstance(v, bool) or not isinstance(v, (int, float)) for v in raw_box
    ):
        raise SchemaViolationError(path + "bbox", "expected [x_min, y_min, x_max, y_max]")
    try:
        box = BBox(*(float(v) for v in raw_box))
    except ValueError as exc:
        raise SchemaViolationError(path + "bbox", str(exc)) from exc
    try:
        return Detection(box, confidence, cls)
    except ValueError as exc:
        raise SchemaViolationError(path.rstrip("."), str(exc)) from exc


def _record_from_json(doc: dict, path: str) -> IterationRecord:
    index = _require(doc, "index", int, path)
    image_ref = _require(doc, "image_ref", str, path)
    det_docs = _require(doc, "detections", list, path)
    detections = [
        _detection_from_json(d, f"{path}detections[{i}].")
        for i, d in enumerate(det_docs)
    ]
    new_raw = _require(doc, "new_hole_indices", list, path)
    for i, v in enumerate(new_raw):
        if isinstance(v, bool) or not isinstance(v, int) or not 0 <= v < len(detections):
            raise SchemaViolationError(
                f"{path}new_hole_indices[{i}]", f"not a valid detection index: {v!r}"
            )
    stats_doc = doc.get("group_stats")
    stats = None
    if stats_doc is not None:
        sp = f"{path}group_stats."
        stats = GroupStats(
            center_px=_point_from(stats_doc, "center_px", sp),
            center_mm=_point_from(stats_doc, "center_mm", sp),
            extreme_spread_mm=_require(stats_doc, "extreme_spread_mm", float, sp),
            mean_radius_mm=_require(stats_doc, "mean_radius_mm", float, sp),
            count=_require(stats_doc, "count", int, sp),
        )
    adj_doc = doc.get("adjustment")
    adjustment = None
    if adj_doc is not None:
        ap = f"{path}adjustment."
        residual = _require(adj_doc, "residual_mm", list, ap)
        if len(residual) != 2:
            raise SchemaViolationError(ap + "residual_mm", "expected [dx, dy]")
        adjustment = Adjustment(
            windage_clicks=_require(adj_doc, "windage_clicks", int, ap),
            elevation_clicks=_require(adj_doc, "elevation_clicks", int, ap),
            residual_mm=(float(residual[0]), float(residual[1])),
        )
    h_raw = doc.get("homography")
    homography = None
    if h_raw is not None:
        if not isinstance(h_raw, list) or len(h_raw) != 9:
            raise SchemaViolationError(path + "homography", "expected 9 numbers")
        homography = Homography.from_flat(h_raw)
    return IterationRecord(
        index=index,
        image_ref=image_ref,
        detections=detections,
        new_hole_indices=list(new_raw),
        group_stats=stats,
        adjustment=adjustment,
        homography=homography,
        used_fallback=bool(doc.get("used_fallback", False)),
    )


def load_session(path: str | Path) -> Session:
    """Parse and validate a session file; field paths name what is wrong."""
    with open(path) as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaViolationError("$", f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaViolationError("$", "top level must be an object")
    click_doc = _require(doc, "click_config", dict, "")
    session = Session(
        session_id=_require(doc, "session_id", str, ""),
        template_ref=_require(doc, "template_ref", str, ""),
        distance_m=_require(doc, "distance_m", float, ""),
        click_config=ClickConfig(
            windage_moa_per_click=_require(
                click_doc, "windage_moa_per_click", float, "click_config."
            ),
            elevation_moa_per_click=_require(
                click_doc, "elevation_moa_per_click", float, "click_config."
            ),
        ),
        aim_point=_point_from(doc, "aim_point", ""),
    )
    if session.distance_m <= 0:
        raise SchemaViolationError("distance_m", "must be positive")
    records = _require(doc, "iterations", list, "")
    for i, record_doc in enumerate(records):
        record = _record_from_json(record_doc, f"iterations[{i}].")
        if record.index != i + 1:
            raise SchemaViolationError(
                f"iterations[{i}].index", f"expected {i + 1}, got {record.index}"
            )
        session.iterations.append(record)
    return session
