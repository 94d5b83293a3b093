"""Corner detection, oriented binary descriptors, and descriptor matching.

The detector is a segment-test corner finder (contiguous arc of 9 of the
16 Bresenham-circle pixels all brighter or all darker than the center by
a threshold) with Harris-response ranking and 3x3 non-maximum
suppression. Descriptors are 256-bit intensity comparisons over a fixed
committed point table, steered by the patch orientation in 12-degree
increments. No scale pyramid: targets are photographed near-frontally,
so a single octave suffices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.ndimage import gaussian_filter, maximum_filter, sobel, uniform_filter

from .brief_pattern import PAIRS
from .errors import ImageTooSmallError, KeypointBorderError
from .imagecore import GrayImage, Point2

DEFAULT_FAST_THRESHOLD = 20
DEFAULT_MAX_KEYPOINTS = 500
# 15 px intensity-centroid radius plus margin; keypoints stay this far
# from every border so orientation and description never read outside.
PATCH_RADIUS = 17
DESCRIPTOR_BITS = 256
DEFAULT_MATCH_MAX_DISTANCE = 64
DEFAULT_MATCH_RATIO = 0.8

_ORIENTATION_BINS = 30
_HARRIS_K = 0.04
_MIN_IMAGE_SIDE = 64

# Bresenham circle of radius 3, clockwise from 12 o'clock.
_RING = (
    (0, -3), (1, -3), (2, -2), (3, -1), (3, 0), (3, 1), (2, 2), (1, 3),
    (0, 3), (-1, 3), (-2, 2), (-3, 1), (-3, 0), (-3, -1), (-2, -2), (-1, -3),
)


class Keypoint(NamedTuple):
    """Corner location with Harris response and patch orientation (radians)."""

    position: Point2
    response: float
    orientation: float


class Match(NamedTuple):
    query_index: int
    train_index: int
    distance: int


def _build_arc_table() -> np.ndarray:
    """arc[code] is True when the 16-bit ring code has a circular run >= 9."""
    codes = np.arange(1 << 16, dtype=np.uint32)
    bits = [(codes >> k) & 1 for k in range(16)]
    ok = np.zeros(1 << 16, dtype=bool)
    for start in range(16):
        run = np.ones(1 << 16, dtype=bool)
        for i in range(9):
            run &= bits[(start + i) % 16].astype(bool)
        ok |= run
    return ok


_ARC9 = _build_arc_table()

_POPCOUNT = np.array([bin(v).count("1") for v in range(256)], dtype=np.uint8)


def _centroid_offsets() -> tuple[np.ndarray, np.ndarray]:
    dys, dxs = np.mgrid[-15:16, -15:16]
    disk = dxs**2 + dys**2 <= 225
    return dxs[disk].astype(np.int64), dys[disk].astype(np.int64)


_CENTROID_DX, _CENTROID_DY = _centroid_offsets()


def _rotated_patterns() -> np.ndarray:
    """Integer pattern offsets per orientation bin, shape (bins, 256, 4)."""
    base = np.array(PAIRS, dtype=np.float64)
    out = np.empty((_ORIENTATION_BINS, DESCRIPTOR_BITS, 4), dtype=np.int64)
    for b in range(_ORIENTATION_BINS):
        angle = 2.0 * math.pi * b / _ORIENTATION_BINS
        c, s = math.cos(angle), math.sin(angle)
        px = np.floor(c * base[:, 0] - s * base[:, 1] + 0.5)
        py = np.floor(s * base[:, 0] + c * base[:, 1] + 0.5)
        qx = np.floor(c * base[:, 2] - s * base[:, 3] + 0.5)
        qy = np.floor(s * base[:, 2] + c * base[:, 3] + 0.5)
        out[b] = np.stack([px, py, qx, qy], axis=1)
    return out


_PATTERNS = _rotated_patterns()


def _harris_response(pixels: np.ndarray) -> np.ndarray:
    img = pixels.astype(np.float64)
    ix = sobel(img, axis=1, mode="reflect")
    iy = sobel(img, axis=0, mode="reflect")
    sxx = gaussian_filter(ix * ix, 1.5, mode="reflect")
    syy = gaussian_filter(iy * iy, 1.5, mode="reflect")
    sxy = gaussian_filter(ix * iy, 1.5, mode="reflect")
    return sxx * syy - sxy * sxy - _HARRIS_K * (sxx + syy) ** 2


def detect_keypoints(
    img: GrayImage,
    threshold: int = DEFAULT_FAST_THRESHOLD,
    max_keypoints: int = DEFAULT_MAX_KEYPOINTS,
) -> list[Keypoint]:
    """Segment-test corners ranked by Harris response, strongest first."""
    if img.width < _MIN_IMAGE_SIDE or img.height < _MIN_IMAGE_SIDE:
        raise ImageTooSmallError(
            f"need at least {_MIN_IMAGE_SIDE}x{_MIN_IMAGE_SIDE}, "
            f"got {img.width}x{img.height}"
        )
    if not 1 <= threshold <= 255:
        raise ValueError(f"threshold must be in [1, 255], got {threshold}")
    if max_keypoints < 1:
        raise ValueError("max_keypoints must be positive")

    px = img.pixels.astype(np.int16)
    h, w = px.shape
    center = px[3 : h - 3, 3 : w - 3]
    hi = center + threshold
    lo = center - threshold
    code_bright = np.zeros(center.shape, dtype=np.uint32)
    code_dark = np.zeros(center.shape, dtype=np.uint32)
    for k, (dx, dy) in enumerate(_RING):
        ring = px[3 + dy : h - 3 + dy, 3 + dx : w - 3 + dx]
        code_bright |= (ring > hi).astype(np.uint32) << k
        code_dark |= (ring < lo).astype(np.uint32) << k
    corners = _ARC9[code_bright] | _ARC9[code_dark]

    mask = np.zeros((h, w), dtype=bool)
    mask[3 : h - 3, 3 : w - 3] = corners
    # Keep every keypoint far enough from the border to describe later.
    mask[:PATCH_RADIUS, :] = False
    mask[h - PATCH_RADIUS :, :] = False
    mask[:, :PATCH_RADIUS] = False
    mask[:, w - PATCH_RADIUS :] = False

    response = _harris_response(px)
    mask &= response > 0.0
    if not mask.any():
        return []

    # 3x3 non-maximum suppression on Harris response among candidates.
    masked = np.where(mask, response, -np.inf)
    mask &= response >= maximum_filter(masked, size=3, mode="constant", cval=-np.inf)

    ys, xs = np.nonzero(mask)
    resp = response[ys, xs]
    order = np.lexsort((xs, ys, -resp))[:max_keypoints]
    ys, xs, resp = ys[order], xs[order], resp[order]

    pix = px.astype(np.float64)
    patch = pix[ys[:, None] + _CENTROID_DY[None, :], xs[:, None] + _CENTROID_DX[None, :]]
    m10 = patch @ _CENTROID_DX.astype(np.float64)
    m01 = patch @ _CENTROID_DY.astype(np.float64)
    angles = np.mod(np.arctan2(m01, m10), 2.0 * math.pi)

    return [
        Keypoint(Point2(float(x), float(y)), float(r), float(a))
        for x, y, r, a in zip(xs, ys, resp, angles)
    ]


def describe(img: GrayImage, keypoints: list[Keypoint]) -> np.ndarray:
    """256-bit descriptors as a (n, 32) uint8 array, row i for keypoint i.

    Bit i is 1 iff the 5x5-smoothed intensity at rotated pattern point
    p_i is strictly less than at q_i.
    """
    n = len(keypoints)
    out = np.zeros((n, DESCRIPTOR_BITS // 8), dtype=np.uint8)
    if n == 0:
        return out
    h, w = img.pixels.shape
    xs = np.empty(n, dtype=np.int64)
    ys = np.empty(n, dtype=np.int64)
    bins = np.empty(n, dtype=np.int64)
    for i, kp in enumerate(keypoints):
        x = int(math.floor(kp.position.x + 0.5))
        y = int(math.floor(kp.position.y + 0.5))
        if not (
            PATCH_RADIUS <= x <= w - 1 - PATCH_RADIUS
            and PATCH_RADIUS <= y <= h - 1 - PATCH_RADIUS
        ):
            raise KeypointBorderError(
                f"keypoint at ({x}, {y}) closer than {PATCH_RADIUS} px to border"
            )
        xs[i], ys[i] = x, y
        bins[i] = int(kp.orientation / (2.0 * math.pi) * _ORIENTATION_BINS) % _ORIENTATION_BINS

    smoothed = uniform_filter(img.pixels.astype(np.float64), size=5, mode="nearest")
    for b in np.unique(bins):
        rows = np.nonzero(bins == b)[0]
        pat = _PATTERNS[b]
        vp = smoothed[ys[rows, None] + pat[None, :, 1], xs[rows, None] + pat[None, :, 0]]
        vq = smoothed[ys[rows, None] + pat[None, :, 3], xs[rows, None] + pat[None, :, 2]]
        out[rows] = np.packbits(vp < vq, axis=1)
    return out


def hamming_distance(a: np.ndarray, b: np.ndarray) -> int:
    """Bit difference count between two packed 32-byte descriptors."""
    return int(_POPCOUNT[np.bitwise_xor(a, b)].sum())


def match_descriptors(
    query: np.ndarray,
    train: np.ndarray,
    max_distance: int = DEFAULT_MATCH_MAX_DISTANCE,
    ratio: float = DEFAULT_MATCH_RATIO,
) -> list[Match]:
    """Nearest-neighbor Hamming matching with a ratio test.

    A query row matches its nearest train row iff the distance is at
    most max_distance and strictly less than ratio times the
    second-nearest distance (a single-row train set has no competitor,
    so only the distance cap applies).
    """
    if len(query) == 0 or len(train) == 0:
        return []
    xored = np.bitwise_xor(query[:, None, :], train[None, :, :])
    dist = _POPCOUNT[xored].sum(axis=2).astype(np.int32)

    matches: list[Match] = []
    for i in range(dist.shape[0]):
        row = dist[i]
        j = int(np.argmin(row))
        d1 = int(row[j])
        if d1 > max_distance:
            continue
        if dist.shape[1] > 1:
            second = np.partition(row, 1)[1]
            if not d1 < ratio * float(second):
                continue
        matches.append(Match(i, j, d1))
    return matches
