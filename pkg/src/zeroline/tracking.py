"""Assignment of detected holes to firing iterations by IoU matching.

A hole seen in the current image either matches something already on
the target (max IoU against every previously seen box reaches the
threshold) or it is new this iteration. Matching is per-current-box
max, not one-to-one: several current boxes may claim the same prior
box, exactly the behavior a paper target produces when a shot lands on
an existing hole. The boundary comparison is >= so a perfect self-match
(IoU 1.0 at threshold 1.0) is unambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .analytics import Adjustment, GroupStats
from .detection import Detection
from .geometry import Homography, iou

DEFAULT_MATCH_THRESHOLD = 0.5


@dataclass(frozen=True)
class MatchResult:
    matched: list[tuple[int, int, float]]  # (prev_index, curr_index, iou)
    new_indices: list[int]
    threshold: float


@dataclass
class IterationRecord:
    """One firing iteration: its detections and which of them are new.

    The trailing optional fields are filled by the session layer; the
    tracker itself only produces the first four.
    """

    index: int
    image_ref: str
    detections: list[Detection]
    new_hole_indices: list[int]
    group_stats: GroupStats | None = None
    adjustment: Adjustment | None = None
    homography: Homography | None = None
    used_fallback: bool = False


def match_iterations(
    prev: list[Detection],
    curr: list[Detection],
    threshold: float = DEFAULT_MATCH_THRESHOLD,
    one_to_one: bool = False,
) -> MatchResult:
    """Split curr into matched-to-prev and new, by max-IoU thresholding.

    With one_to_one (experimental, off by default) each prev box can be
    claimed at most once, greedily in descending IoU order.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    if not prev:
        return MatchResult([], list(range(len(curr))), threshold)

    if one_to_one:
        candidates = []
        for j, c in enumerate(curr):
            for i, p in enumerate(prev):
                value = iou(p.bbox, c.bbox)
                if value >= threshold:
                    candidates.append((-value, i, j))
        candidates.sort()
        taken_prev: set[int] = set()
        taken_curr: set[int] = set()
        matched = []
        for neg_value, i, j in candidates:
            if i in taken_prev or j in taken_curr:
                continue
            taken_prev.add(i)
            taken_curr.add(j)
            matched.append((i, j, -neg_value))
        matched.sort(key=lambda m: m[1])
        new_indices = [j for j in range(len(curr)) if j not in taken_curr]
        return MatchResult(matched, new_indices, threshold)

    matched = []
    new_indices = []
    for j, c in enumerate(curr):
        best_i = -1
        best_value = -1.0
        for i, p in enumerate(prev):
            value = iou(p.bbox, c.bbox)
            if value > best_value:  # strict: ties keep the lowest prev index
                best_value = value
                best_i = i
        if best_value >= threshold:
            matched.append((best_i, j, best_value))
        else:
            new_indices.append(j)
    return MatchResult(matched, new_indices, threshold)


def label_session(
    iterations: list[list[Detection]],
    threshold: float = DEFAULT_MATCH_THRESHOLD,
) -> list[IterationRecord]:
    """Label every iteration's detections against all earlier ones.

    Iteration 1 is all-new by definition. Later iterations match against
    the accumulated detections of every earlier iteration, not just the
    previous one, so a hole visible since iteration 1 never re-registers
    as new after an intermediate miss.
    """
    if not iterations:
        raise ValueError("need at least one iteration")
    records: list[IterationRecord] = []
    accumulated: list[Detection] = []
    for index, detections in enumerate(iterations, start=1):
        if index == 1:
            new_indices = list(range(len(detections)))
        else:
            new_indices = match_iterations(accumulated, detections, threshold).new_indices
        records.append(IterationRecord(index, "", list(detections), new_indices))
        accumulated.extend(detections)
    return records


def jaccard_index(predicted_new: set, truth_new: set) -> float:
    """|intersection| / |union| over aligned hole identities; 1.0 if both empty."""
    if not predicted_new and not truth_new:
        return 1.0
    union = predicted_new | truth_new
    return len(predicted_new & truth_new) / len(union)
