"""Planar geometry: boxes, IoU, homography estimation, RANSAC.

Coordinates follow image convention (x right, y down). Homographies are
3x3 row-major float64 matrices acting on homogeneous (x, y, 1) columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    NoConsensusError,
    NumericalFailureError,
    PointAtInfinityError,
    SingularHomographyError,
    TooFewMatchesError,
)
from .imagecore import Point2

# Smallest |w| treated as a finite homogeneous coordinate.
_W_EPSILON = 1e-12
# Triangle area below which three points count as collinear.
_COLLINEAR_AREA = 1e-9
# RANSAC early-exit confidence that at least one all-inlier sample was drawn.
_RANSAC_CONFIDENCE = 0.999


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box with exclusive area semantics (no +1 inflation)."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"degenerate box ({self.x_min},{self.y_min},{self.x_max},{self.y_max})"
            )

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> Point2:
        return Point2((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def as_list(self) -> list[float]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @classmethod
    def from_list(cls, values) -> "BBox":
        x0, y0, x1, y1 = (float(v) for v in values)
        return cls(x0, y0, x1, y1)


def iou(a: BBox, b: BBox) -> float:
    """Intersection-over-union of two boxes; 0 for disjoint or touching edges."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


@dataclass(frozen=True, eq=False)
class Homography:
    """Plane projective map, normalized so m22 == 1 (or Frobenius 1 if m22 ~ 0).

    Construction only requires finite entries; operations that need the
    inverse reject |det| <= 1e-12 with SingularHomographyError.
    """

    matrix: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"homography must be 3x3, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("homography entries must be finite")
        if abs(m[2, 2]) > 1e-9:
            m = m / m[2, 2]
        else:
            norm = float(np.linalg.norm(m))
            if norm == 0.0:
                raise SingularHomographyError("all-zero homography")
            m = m / norm
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def from_flat(cls, values) -> "Homography":
        arr = np.asarray(list(values), dtype=np.float64)
        if arr.shape != (9,):
            raise ValueError(f"expected 9 values, got shape {arr.shape}")
        return cls(arr.reshape(3, 3))

    def as_flat_list(self) -> list[float]:
        """Row-major 9-element list, the JSON wire form."""
        return [float(v) for v in self.matrix.reshape(-1)]

    def inverse(self) -> "Homography":
        if abs(np.linalg.det(self.matrix)) <= _W_EPSILON:
            raise SingularHomographyError("|det| <= 1e-12, not invertible")
        return Homography(np.linalg.inv(self.matrix))

    def compose(self, other: "Homography") -> "Homography":
        """Return self applied after other: (self.compose(other))(p) == self(other(p))."""
        return Homography(self.matrix @ other.matrix)


def apply_homography(h: Homography, p: Point2) -> Point2:
    """Map a point through h; rejects results at or near infinity."""
    m = h.matrix
    x, y = float(p[0]), float(p[1])
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    if abs(w) <= _W_EPSILON:
        raise PointAtInfinityError(f"point {p} maps to infinity (w={w})")
    u = (m[0, 0] * x + m[0, 1] * y + m[0, 2]) / w
    v = (m[1, 0] * x + m[1, 1] * y + m[1, 2]) / w
    if not (math.isfinite(u) and math.isfinite(v)):
        raise PointAtInfinityError(f"point {p} maps to non-finite coordinates")
    return Point2(u, v)


def transform_bbox(h: Homography, box: BBox) -> BBox:
    """Axis-aligned envelope of the four mapped box corners."""
    corners = [
        Point2(box.x_min, box.y_min),
        Point2(box.x_max, box.y_min),
        Point2(box.x_max, box.y_max),
        Point2(box.x_min, box.y_max),
    ]
    mapped = [apply_homography(h, c) for c in corners]
    xs = [p.x for p in mapped]
    ys = [p.y for p in mapped]
    return BBox(min(xs), min(ys), max(xs), max(ys))


def _project(matrix: np.ndarray, pts: np.ndarray) -> np.ndarray:
    """Map an (n,2) array through a homography matrix; infinities become nan."""
    w = matrix[2, 0] * pts[:, 0] + matrix[2, 1] * pts[:, 1] + matrix[2, 2]
    safe = np.abs(w) > _W_EPSILON
    w = np.where(safe, w, 1.0)
    u = (matrix[0, 0] * pts[:, 0] + matrix[0, 1] * pts[:, 1] + matrix[0, 2]) / w
    v = (matrix[1, 0] * pts[:, 0] + matrix[1, 1] * pts[:, 1] + matrix[1, 2]) / w
    out = np.stack([u, v], axis=1)
    out[~safe] = np.nan
    return out


def _has_collinear_triple(pts: np.ndarray) -> bool:
    n = len(pts)
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                d1 = pts[j] - pts[i]
                d2 = pts[k] - pts[i]
                area = abs(d1[0] * d2[1] - d1[1] * d2[0]) / 2.0
                if area <= _COLLINEAR_AREA:
                    return True
    return False


def _normalization_transform(pts: np.ndarray) -> np.ndarray:
    """Similarity moving the centroid to 0 with RMS radius sqrt(2)."""
    centroid = pts.mean(axis=0)
    rms = math.sqrt(float(np.mean(np.sum((pts - centroid) ** 2, axis=1))))
    if rms <= _COLLINEAR_AREA:
        raise DegenerateConfigurationError("point set collapses to a single point")
    s = math.sqrt(2.0) / rms
    return np.array(
        [[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]]
    )


def _dlt(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized DLT on (n,2) arrays; returns an unnormalized 3x3 matrix."""
    t_src = _normalization_transform(src)
    t_dst = _normalization_transform(dst)
    ns = (src * t_src[0, 0]) + t_src[:2, 2]
    nd = (dst * t_dst[0, 0]) + t_dst[:2, 2]

    n = len(src)
    a = np.zeros((2 * n, 9), dtype=np.float64)
    x, y = ns[:, 0], ns[:, 1]
    u, v = nd[:, 0], nd[:, 1]
    a[0::2, 0] = -x
    a[0::2, 1] = -y
    a[0::2, 2] = -1.0
    a[0::2, 6] = u * x
    a[0::2, 7] = u * y
    a[0::2, 8] = u
    a[1::2, 3] = -x
    a[1::2, 4] = -y
    a[1::2, 5] = -1.0
    a[1::2, 6] = v * x
    a[1::2, 7] = v * y
    a[1::2, 8] = v

    # Null space via the 9x9 normal matrix: cheaper than a full SVD of a,
    # and accurate enough after Hartley normalization.
    m = a.T @ a
    try:
        _, vecs = np.linalg.eigh(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError(f"eigendecomposition failed: {exc}") from exc
    h_norm = vecs[:, 0].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_norm @ t_src
    if not np.all(np.isfinite(h)):
        raise NumericalFailureError("non-finite homography entries")
    return h


def estimate_homography_dlt(pairs: list[tuple[Point2, Point2]]) -> Homography:
    """Least-squares homography from >= 4 (source, destination) pairs."""
    if len(pairs) < 4:
        raise DegenerateConfigurationError(
            f"need at least 4 pairs, got {len(pairs)}"
        )
    src = np.array([[p[0][0], p[0][1]] for p in pairs], dtype=np.float64)
    dst = np.array([[p[1][0], p[1][1]] for p in pairs], dtype=np.float64)
    if len(pairs) == 4 and _has_collinear_triple(src):
        raise DegenerateConfigurationError("3 of 4 source points are collinear")
    h = Homography(_dlt(src, dst))
    if abs(np.linalg.det(h.matrix)) <= _W_EPSILON:
        raise DegenerateConfigurationError("estimated homography is singular")
    return h


@dataclass(frozen=True)
class RansacParams:
    max_iterations: int = 2000
    inlier_threshold: float = 3.0
    min_inliers: int = 15
    seed: int = 0


def ransac_homography(
    matches: list[tuple[Point2, Point2]], params: RansacParams | None = None
) -> tuple[Homography, list[int]]:
    """Robust homography fit from noisy correspondences.

    Seeded and fully deterministic: samples 4 non-degenerate pairs per
    iteration, scores by reprojection distance <= inlier_threshold,
    keeps the largest consensus set (first found wins ties), then refits
    on all inliers. Iteration count adapts downward once the inlier
    ratio supports 99.9% confidence, never exceeding max_iterations.
    """
    if params is None:
        params = RansacParams()
    n = len(matches)
    if n < 4:
        raise TooFewMatchesError(f"need at least 4 matches, got {n}")
    src = np.array([[m[0][0], m[0][1]] for m in matches], dtype=np.float64)
    dst = np.array([[m[1][0], m[1][1]] for m in matches], dtype=np.float64)

    rng = np.random.default_rng(params.seed)
    thr_sq = params.inlier_threshold**2
    best_count = 0
    best_mask: np.ndarray | None = None
    iteration = 0
    budget = params.max_iterations
    while iteration < budget:
        idx = rng.choice(n, size=4, replace=False)
        iteration += 1
        sample_src = src[idx]
        sample_dst = dst[idx]
        if _has_collinear_triple(sample_src) or _has_collinear_triple(sample_dst):
            continue
        try:
            candidate = _dlt(sample_src, sample_dst)
        except (DegenerateConfigurationError, NumericalFailureError):
            continue
        if abs(np.linalg.det(candidate)) <= _W_EPSILON:
            continue
        proj = _project(candidate, src)
        err = np.sum((proj - dst) ** 2, axis=1)
        mask = np.isfinite(err) & (err <= thr_sq)
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
            ratio = count / n
            if ratio >= 1.0:
                break
            p_good = ratio**4
            if p_good > 0.0:
                needed = math.log(1.0 - _RANSAC_CONFIDENCE) / math.log(1.0 - p_good)
                budget = min(params.max_iterations, max(iteration, math.ceil(needed)))

    if best_mask is None or best_count < params.min_inliers:
        raise NoConsensusError(
            f"best consensus {best_count} below min_inliers {params.min_inliers}"
        )
    inliers = [int(i) for i in np.flatnonzero(best_mask)]
    inlier_pairs = [(Point2(*src[i]), Point2(*dst[i])) for i in inliers]
    try:
        refit = Homography(_dlt(src[best_mask], dst[best_mask]))
        if abs(np.linalg.det(refit.matrix)) <= _W_EPSILON:
            raise NumericalFailureError("refit singular")
    except (DegenerateConfigurationError, NumericalFailureError):
        # Inlier refit can only fail on pathological geometry; fall back to
        # re-estimating from the minimal consensus subset.
        refit = estimate_homography_dlt(inlier_pairs[:4])
    return refit, inliers
