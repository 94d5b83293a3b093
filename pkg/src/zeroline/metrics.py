"""Detection and pipeline evaluation: AP curves, label accuracy, report assembly.

All metrics operate on canonical-frame boxes. Wherever predicted and
ground-truth holes must be identified with each other, the same rule is
used: candidate pairs in descending IoU order, keep a pair when both
sides are still free and the IoU clears the threshold. That alignment is
an evaluation convention, not part of the tracker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .detection import Detection
from .errors import EmptyDatasetError, InvalidConfigError, NoGroundTruthError
from .geometry import BBox, iou
from .tracking import IterationRecord, jaccard_index

ALIGNMENT_IOU = 0.5
DEFAULT_AP_THRESHOLDS = tuple(round(0.50 + 0.05 * k, 2) for k in range(10))


def align_boxes(
    pred: list[BBox], truth: list[BBox], threshold: float = ALIGNMENT_IOU
) -> dict[int, int]:
    """Greedy bipartite matching: {pred index -> truth index}, IoU >= threshold.

    Pairs are considered in descending IoU; ties break on the lower pred
    index, then the lower truth index, so the result is deterministic.
    """
    candidates = []
    for i, p in enumerate(pred):
        for j, t in enumerate(truth):
            value = iou(p, t)
            if value >= threshold:
                candidates.append((-value, i, j))
    candidates.sort()
    taken_pred: set[int] = set()
    taken_truth: set[int] = set()
    pairs: dict[int, int] = {}
    for _, i, j in candidates:
        if i in taken_pred or j in taken_truth:
            continue
        taken_pred.add(i)
        taken_truth.add(j)
        pairs[i] = j
    return pairs


def _ranked(dets: list[Detection]) -> list[int]:
    """Indices in scoring order: descending confidence, ties by input order."""
    return sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))


def _greedy_tp_flags(
    dets: list[Detection], order: list[int], gts: list[BBox], iou_threshold: float
) -> list[bool]:
    """TP flag per ranked detection; each GT is consumed by one detection."""
    unmatched = set(range(len(gts)))
    flags = []
    for i in order:
        best_j = -1
        best_value = 0.0
        for j in unmatched:
            value = iou(dets[i].bbox, gts[j])
            if value > best_value or (value == best_value and best_j >= 0 and j < best_j):
                best_j = j
                best_value = value
        if best_j >= 0 and best_value >= iou_threshold:
            unmatched.discard(best_j)
            flags.append(True)
        else:
            flags.append(False)
    return flags


def _area_under_envelope(recalls: list[float], precisions: list[float]) -> float:
    """All-point interpolation: precision envelope integrated over recall."""
    envelope = list(precisions)
    for k in range(len(envelope) - 2, -1, -1):
        envelope[k] = max(envelope[k], envelope[k + 1])
    area = 0.0
    previous = 0.0
    for recall, precision in zip(recalls, envelope):
        area += (recall - previous) * precision
        previous = recall
    return area


def average_precision(
    dets: list[Detection], gts: list[BBox], iou_threshold: float
) -> float:
    """AP of one ranked detection list against one ground-truth list."""
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    if not gts:
        raise NoGroundTruthError("average precision is undefined without ground truth")
    order = _ranked(dets)
    flags = _greedy_tp_flags(dets, order, gts, iou_threshold)
    recalls = []
    precisions = []
    tp = 0
    for rank, flag in enumerate(flags, start=1):
        if flag:
            tp += 1
        recalls.append(tp / len(gts))
        precisions.append(tp / rank)
    return _area_under_envelope(recalls, precisions)


def pr_curve(
    dataset: list[tuple[list[Detection], list[BBox]]], iou_threshold: float
) -> tuple[list[float], list[float]]:
    """Dataset-pooled (recalls, precisions), one point per ranked detection.

    Detections rank globally by descending confidence (ties by dataset
    order) but each can only match ground truth of its own image; images
    with no ground truth still contribute their false positives.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValueError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    if not dataset:
        raise EmptyDatasetError("PR curve over an empty dataset")
    total_gt = sum(len(gts) for _, gts in dataset)
    if total_gt == 0:
        raise NoGroundTruthError("PR curve is undefined without ground truth")

    entries = []  # (-confidence, image index, det index) global ranking
    for image_index, (dets, _) in enumerate(dataset):
        for det_index, det in enumerate(dets):
            entries.append((-det.confidence, image_index, det_index))
    entries.sort()

    unmatched = [set(range(len(gts))) for _, gts in dataset]
    recalls = []
    precisions = []
    tp = 0
    for rank, (_, image_index, det_index) in enumerate(entries, start=1):
        dets, gts = dataset[image_index]
        box = dets[det_index].bbox
        best_j = -1
        best_value = 0.0
        for j in unmatched[image_index]:
            value = iou(box, gts[j])
            if value > best_value or (
                value == best_value and best_j >= 0 and j < best_j
            ):
                best_j = j
                best_value = value
        if best_j >= 0 and best_value >= iou_threshold:
            unmatched[image_index].discard(best_j)
            tp += 1
        recalls.append(tp / total_gt)
        precisions.append(tp / rank)
    return recalls, precisions


def mean_ap(
    dataset: list[tuple[list[Detection], list[BBox]]],
    thresholds: tuple[float, ...] | list[float] = DEFAULT_AP_THRESHOLDS,
) -> tuple[list[tuple[float, float]], float]:
    """Dataset-pooled AP per threshold, and the mean over thresholds."""
    if not thresholds:
        raise ValueError("thresholds must be non-empty")
    per_threshold: list[tuple[float, float]] = []
    for t in thresholds:
        recalls, precisions = pr_curve(dataset, t)
        per_threshold.append((t, _area_under_envelope(recalls, precisions)))
    mean = sum(ap for _, ap in per_threshold) / len(per_threshold)
    return per_threshold, mean


def _label_counts(
    predicted: list[tuple[BBox, int]], truth: list[tuple[BBox, int]]
) -> tuple[int, int]:
    """(correctly labeled, denominator) for one sequence's hole labels.

    Denominator counts every ground-truth hole plus every predicted hole
    that aligns with no truth at all: a spurious "new hole" is an error
    even though no ground-truth label exists for it.
    """
    pairs = align_boxes([b for b, _ in predicted], [b for b, _ in truth])
    correct = sum(1 for i, j in pairs.items() if predicted[i][1] == truth[j][1])
    return correct, len(truth) + len(predicted) - len(pairs)


def iteration_classification_accuracy(
    records: list[IterationRecord], truth: list[tuple[BBox, int]]
) -> float:
    """Fraction of truth holes whose predicted firing iteration is right.

    A hole's predicted iteration is the index of the record that flagged
    it new; truth is (canonical bbox, iteration) per hole. 1.0 when both
    sides are empty.
    """
    predicted = []
    for record in records:
        for i in record.new_hole_indices:
            predicted.append((record.detections[i].bbox, record.index))
    correct, denominator = _label_counts(predicted, truth)
    if denominator == 0:
        return 1.0
    return correct / denominator


@dataclass(frozen=True)
class PipelineCase:
    """End-to-end outcome for one raw input image."""

    segmented: bool
    count_match: bool
    labels_correct: bool


def full_pipeline_accuracy(cases: list[PipelineCase]) -> float:
    """Fraction of cases where segmentation, count, and labels all hold."""
    if not cases:
        raise EmptyDatasetError("full pipeline accuracy over zero cases")
    good = sum(
        1 for c in cases if c.segmented and c.count_match and c.labels_correct
    )
    return good / len(cases)


@dataclass(frozen=True)
class ImageEval:
    """Everything needed to score one raw image of one target sequence.

    labels[i] is the predicted firing iteration of detections[i] (equal
    to the image's own iteration index exactly for the holes flagged
    new); truth lists every hole visible on this image as (canonical
    bbox, true iteration).
    """

    target_id: str
    iteration: int
    segmented: bool
    detections: list[Detection] = field(default_factory=list)
    labels: list[int] = field(default_factory=list)
    truth: list[tuple[BBox, int]] = field(default_factory=list)

    def __post_init__(self):
        if len(self.labels) != len(self.detections):
            raise ValueError(
                f"{len(self.labels)} labels for {len(self.detections)} detections"
            )


@dataclass(frozen=True)
class EvalReport:
    """The evaluation summary; field names are the report JSON schema."""

    map50: float
    map50_95: float
    per_threshold_ap: list[tuple[float, float]]
    jaccard_mean: float
    iteration_classification_accuracy: float
    segmentation_accuracy: float
    full_pipeline_accuracy: float
    counts: dict[str, int]

    def __post_init__(self):
        for name in (
            "map50",
            "map50_95",
            "jaccard_mean",
            "iteration_classification_accuracy",
            "segmentation_accuracy",
            "full_pipeline_accuracy",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")

    def to_dict(self) -> dict:
        return {
            "map50": self.map50,
            "map50_95": self.map50_95,
            "per_threshold_ap": [[t, ap] for t, ap in self.per_threshold_ap],
            "jaccard_mean": self.jaccard_mean,
            "iteration_classification_accuracy": self.iteration_classification_accuracy,
            "segmentation_accuracy": self.segmentation_accuracy,
            "full_pipeline_accuracy": self.full_pipeline_accuracy,
            "counts": dict(self.counts),
        }


def _image_case(row: ImageEval) -> PipelineCase:
    if not row.segmented:
        return PipelineCase(False, False, False)
    count_match = len(row.detections) == len(row.truth)
    pairs = align_boxes([d.bbox for d in row.detections], [b for b, _ in row.truth])
    labels_correct = (
        len(pairs) == len(row.truth)
        and len(pairs) == len(row.detections)
        and all(row.labels[i] == row.truth[j][1] for i, j in pairs.items())
    )
    return PipelineCase(True, count_match, labels_correct)


def _record_jaccard(row: ImageEval) -> float:
    """Jaccard of predicted vs truth new-hole sets, via truth alignment.

    Predicted-new detections that align with no truth hole get unique
    placeholder identities so they shrink the score instead of vanishing.
    """
    pairs = align_boxes([d.bbox for d in row.detections], [b for b, _ in row.truth])
    truth_new = {j for j, (_, it) in enumerate(row.truth) if it == row.iteration}
    predicted_new: set[int] = set()
    placeholder = -1
    for i, label in enumerate(row.labels):
        if label != row.iteration:
            continue
        if i in pairs:
            predicted_new.add(pairs[i])
        else:
            predicted_new.add(placeholder)
            placeholder -= 1
    return jaccard_index(predicted_new, truth_new)


def compile_report(
    rows: list[ImageEval],
    thresholds: tuple[float, ...] | list[float] = DEFAULT_AP_THRESHOLDS,
) -> EvalReport:
    """Aggregate per-image results into the full evaluation report.

    Detection AP pools over successfully segmented images only (the
    detector never saw the rest); segmentation and full-pipeline rates
    cover every image. Rows are re-sorted by (target, iteration) so the
    report is identical regardless of input order.
    """
    if not rows:
        raise EmptyDatasetError("evaluation over zero images")
    if not any(math.isclose(t, 0.50) for t in thresholds):
        raise InvalidConfigError("AP thresholds must include 0.50 for map50")
    rows = sorted(rows, key=lambda r: (r.target_id, r.iteration))

    dataset = [
        (r.detections, [b for b, _ in r.truth]) for r in rows if r.segmented
    ]
    per_threshold, map_mean = mean_ap(dataset, thresholds)
    map50 = next(ap for t, ap in per_threshold if math.isclose(t, 0.50))

    followups = [r for r in rows if r.iteration >= 2]
    if followups:
        jaccard_mean = sum(_record_jaccard(r) for r in followups) / len(followups)
    else:
        jaccard_mean = 1.0

    correct_total = 0
    denominator_total = 0
    by_target: dict[str, list[ImageEval]] = {}
    for r in rows:
        by_target.setdefault(r.target_id, []).append(r)
    for target_rows in by_target.values():
        predicted = []
        for r in target_rows:
            for i, label in enumerate(r.labels):
                if label == r.iteration:
                    predicted.append((r.detections[i].bbox, label))
        final = max(target_rows, key=lambda r: r.iteration)
        correct, denominator = _label_counts(predicted, final.truth)
        correct_total += correct
        denominator_total += denominator
    label_accuracy = 1.0 if denominator_total == 0 else correct_total / denominator_total

    cases = [_image_case(r) for r in rows]
    segmentation_accuracy = sum(1 for r in rows if r.segmented) / len(rows)

    counts = {
        "images": len(rows),
        "targets": len(by_target),
        "holes": sum(
            len(max(target_rows, key=lambda r: r.iteration).truth)
            for target_rows in by_target.values()
        ),
    }
    return EvalReport(
        map50=map50,
        map50_95=map_mean,
        per_threshold_ap=per_threshold,
        jaccard_mean=jaccard_mean,
        iteration_classification_accuracy=label_accuracy,
        segmentation_accuracy=segmentation_accuracy,
        full_pipeline_accuracy=full_pipeline_accuracy(cases),
        counts=counts,
    )
