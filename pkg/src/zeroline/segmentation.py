"""Registration of raw target photos into the canonical template frame.

Two-pass scheme. Pass 1 runs feature matching and robust homography
estimation against a stored blank-target template on the full frame.
Pass 2 fires only when pass 1 fails (too few matches or no consensus):
a brightness-based coarse localizer proposes the target region, the
frame is cropped with padding, and pass 1 re-runs on the crop with the
crop offset composed into the final homography. Only a double failure
raises, and the error carries per-pass match and inlier counts so a
caller can tell a featureless frame from a geometric breakdown.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage
from skimage.filters import threshold_otsu

from .errors import (
    DegenerateConfigurationError,
    InvalidConfigError,
    NoCandidateRegionError,
    NoConsensusError,
    SegmentationFailureError,
    SingularHomographyError,
    TooFewMatchesError,
)
from .features import Keypoint, describe, detect_keypoints, match_descriptors
from .geometry import BBox, Homography, RansacParams, ransac_homography
from .imagecore import GrayImage, Point2, load_pgm, save_pgm, warp_perspective

DEFAULT_CANONICAL_SIZE = 800
DEFAULT_MM_PER_PIXEL = 0.5
# Below this many template keypoints, registration has nothing to lock
# onto and every segment() call would be a coin toss.
MIN_TEMPLATE_KEYPOINTS = 50
MIN_MATCHES = 8
# Registration runs a denser keypoint budget than the detector default:
# more inliers spread wider tighten the least-squares fit enough to
# keep worst-case corner reprojection under 2 px on synthetic imagery.
REGISTRATION_KEYPOINTS = 900

_MIN_CANONICAL_SIZE = 256
_COARSE_FILL_RATIO = 0.5
_COARSE_MIN_AREA_FRACTION = 0.05
_CROP_PAD_FRACTION = 0.10
_MIN_CROP_SIDE = 64


@dataclass(frozen=True)
class TargetTemplate:
    """Blank canonical target with its precomputed feature set."""

    image: GrayImage
    canonical_size: int
    mm_per_pixel: float
    keypoints: list[Keypoint]
    descriptors: np.ndarray

    @property
    def aim_point(self) -> Point2:
        # The aim mark is rendered at the exact canonical center.
        half = self.canonical_size / 2.0
        return Point2(half, half)


@dataclass(frozen=True)
class NormalizedTarget:
    """A raw photo resampled into the canonical frame."""

    image: GrayImage
    homography_raw_to_canonical: Homography
    inlier_count: int
    used_fallback: bool


def build_template(
    image: GrayImage, mm_per_pixel: float, canonical_size: int | None = None
) -> TargetTemplate:
    """Wrap a blank-target image and precompute its registration features."""
    if mm_per_pixel <= 0:
        raise InvalidConfigError(f"mm_per_pixel must be positive, got {mm_per_pixel}")
    if image.width != image.height:
        raise InvalidConfigError(
            f"template must be square, got {image.width}x{image.height}"
        )
    if canonical_size is None:
        canonical_size = image.width
    if canonical_size != image.width:
        raise InvalidConfigError(
            f"canonical_size {canonical_size} does not match image side {image.width}"
        )
    if canonical_size < _MIN_CANONICAL_SIZE:
        raise InvalidConfigError(
            f"canonical_size must be >= {_MIN_CANONICAL_SIZE}, got {canonical_size}"
        )
    keypoints = detect_keypoints(image, max_keypoints=REGISTRATION_KEYPOINTS)
    if len(keypoints) < MIN_TEMPLATE_KEYPOINTS:
        raise InvalidConfigError(
            f"template too plain: {len(keypoints)} keypoints, "
            f"need >= {MIN_TEMPLATE_KEYPOINTS}"
        )
    descriptors = describe(image, keypoints)
    return TargetTemplate(image, canonical_size, mm_per_pixel, keypoints, descriptors)


def save_template(template: TargetTemplate, pgm_path: str | Path) -> None:
    """Write the template image plus a JSON sidecar with its metadata."""
    pgm_path = Path(pgm_path)
    save_pgm(template.image, pgm_path)
    sidecar = {
        "canonical_size": template.canonical_size,
        "mm_per_pixel": template.mm_per_pixel,
    }
    pgm_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def load_template(pgm_path: str | Path) -> TargetTemplate:
    """Load a template image and sidecar; features are recomputed."""
    pgm_path = Path(pgm_path)
    image = load_pgm(pgm_path)
    sidecar_path = pgm_path.with_suffix(".json")
    try:
        sidecar = json.loads(sidecar_path.read_text())
    except json.JSONDecodeError as exc:
        raise InvalidConfigError(f"unreadable template sidecar {sidecar_path}: {exc}")
    if not isinstance(sidecar, dict) or "mm_per_pixel" not in sidecar:
        raise InvalidConfigError(f"template sidecar {sidecar_path} missing mm_per_pixel")
    mm_per_pixel = float(sidecar["mm_per_pixel"])
    declared = int(sidecar.get("canonical_size", image.width))
    return build_template(image, mm_per_pixel, canonical_size=declared)


def coarse_locate_target(raw: GrayImage) -> BBox:
    """Rough target box: largest compact bright region of the Otsu split.

    Candidates must fill at least half their bounding box and cover at
    least 5% of the frame; anything less is glare or clutter, not a
    sheet of paper.
    """
    px = raw.pixels
    if int(px.min()) == int(px.max()):
        raise NoCandidateRegionError("image is uniform, no bright region")
    threshold = threshold_otsu(px)
    bright = px > threshold
    labels, count = ndimage.label(bright)
    if count == 0:
        raise NoCandidateRegionError("no bright pixels above Otsu threshold")
    best: BBox | None = None
    best_area = 0
    frame_area = raw.width * raw.height
    for slice_y, slice_x in ndimage.find_objects(labels):
        region = labels[slice_y, slice_x] > 0
        area = int(region.sum())
        box_area = region.shape[0] * region.shape[1]
        if area < _COARSE_MIN_AREA_FRACTION * frame_area:
            continue
        if area / box_area < _COARSE_FILL_RATIO:
            continue
        if area > best_area:
            best_area = area
            best = BBox(
                float(slice_x.start),
                float(slice_y.start),
                float(slice_x.stop),
                float(slice_y.stop),
            )
    if best is None:
        raise NoCandidateRegionError(
            f"no bright component with fill ratio >= {_COARSE_FILL_RATIO} "
            f"and area >= {_COARSE_MIN_AREA_FRACTION:.0%} of the frame"
        )
    return best


def _crop_window(raw: GrayImage, box: BBox) -> tuple[int, int, int, int]:
    """Padded, clamped integer crop window (x0, y0, x1, y1) around box."""
    pad_x = _CROP_PAD_FRACTION * box.width
    pad_y = _CROP_PAD_FRACTION * box.height
    x0 = max(0, int(np.floor(box.x_min - pad_x)))
    y0 = max(0, int(np.floor(box.y_min - pad_y)))
    x1 = min(raw.width, int(np.ceil(box.x_max + pad_x)))
    y1 = min(raw.height, int(np.ceil(box.y_max + pad_y)))
    # The feature detector needs room to work; widen undersized crops.
    while x1 - x0 < _MIN_CROP_SIDE and (x0 > 0 or x1 < raw.width):
        x0 = max(0, x0 - 1)
        x1 = min(raw.width, x1 + 1)
    while y1 - y0 < _MIN_CROP_SIDE and (y0 > 0 or y1 < raw.height):
        y0 = max(0, y0 - 1)
        y1 = min(raw.height, y1 + 1)
    return x0, y0, x1, y1


def _register(
    photo: GrayImage,
    template: TargetTemplate,
    ransac: RansacParams,
    diagnostics: dict,
) -> tuple[Homography, int]:
    """One matching + RANSAC attempt; fills diagnostics as it goes."""
    keypoints = detect_keypoints(photo, max_keypoints=REGISTRATION_KEYPOINTS)
    diagnostics["keypoints"] = len(keypoints)
    diagnostics["matches"] = 0
    diagnostics["inliers"] = 0
    descriptors = describe(photo, keypoints)
    matches = match_descriptors(descriptors, template.descriptors)
    diagnostics["matches"] = len(matches)
    if len(matches) < MIN_MATCHES:
        raise TooFewMatchesError(
            f"{len(matches)} matches, need >= {MIN_MATCHES}"
        )
    pairs = [
        (keypoints[m.query_index].position, template.keypoints[m.train_index].position)
        for m in matches
    ]
    homography, inliers = ransac_homography(pairs, ransac)
    diagnostics["inliers"] = len(inliers)
    return homography, len(inliers)


def segment(
    raw: GrayImage,
    template: TargetTemplate,
    ransac: RansacParams | None = None,
) -> NormalizedTarget:
    """Register a raw photo to the template and warp it to canonical size."""
    if ransac is None:
        ransac = RansacParams()
    size = template.canonical_size
    failure_kinds = (
        TooFewMatchesError,
        NoConsensusError,
        DegenerateConfigurationError,
        SingularHomographyError,
    )

    pass1: dict = {}
    try:
        homography, inliers = _register(raw, template, ransac, pass1)
        warped = warp_perspective(raw, homography, size, size)
        return NormalizedTarget(warped, homography, inliers, used_fallback=False)
    except failure_kinds as exc:
        pass1["reason"] = str(exc)

    pass2: dict = {}
    try:
        box = coarse_locate_target(raw)
        x0, y0, x1, y1 = _crop_window(raw, box)
        pass2["crop"] = [x0, y0, x1, y1]
        crop = GrayImage(raw.pixels[y0:y1, x0:x1].copy())
        crop_homography, inliers = _register(crop, template, ransac, pass2)
        shift = Homography(
            np.array([[1.0, 0.0, -x0], [0.0, 1.0, -y0], [0.0, 0.0, 1.0]])
        )
        homography = crop_homography.compose(shift)
        warped = warp_perspective(raw, homography, size, size)
        return NormalizedTarget(warped, homography, inliers, used_fallback=True)
    except (NoCandidateRegionError, *failure_kinds) as exc:
        pass2["reason"] = str(exc)

    raise SegmentationFailureError(
        "both registration passes failed",
        diagnostics={"pass1": pass1, "pass2": pass2},
    )
