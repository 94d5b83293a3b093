"""Deterministic synthetic targets and firing sequences with ground truth.

The canonical target is rendered from scratch: bright paper, a dark
border frame, a 25 mm grid, four distinct corner fiducials (asymmetric
so registration cannot lock onto a rotated or mirrored fit), edge tick
bars, and a central diamond aim mark. Ink intensities are chosen
against the blob detector's percentile threshold: the border and
fiducials (intensity 60) put more than 5% of pixels in the dark tail,
so the detection threshold lands inside that band and everything
lighter (speckle 195-227, grid 200, ticks 200, diamond 160) stays out
of the candidate mask while bullet holes (25 +/- 10) stay safely
inside it.

Sequences punch holes cumulatively into one canonical canvas; each
iteration's snapshot is warped by a fresh corner-jitter homography and
degraded with Gaussian noise, one raw image per iteration, exactly as a
fixed paper target photographed from varying viewpoints. Holes are a
dark textured core inside a bright ragged collar, the torn-paper flange
around a real bullet hole. The collar is drawn over whatever is under
it, so a shot landing next to an old hole bites into it instead of
fusing with it; only a nearly coincident shot destroys the older hole,
which is the hard case the tracker is measured on.

Everything is driven by one seeded generator in a fixed draw order, so
(spec, template) determine every output byte.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ImageTooSmallError, SchemaViolationError
from .geometry import BBox, Homography, estimate_homography_dlt, iou
from .imagecore import GrayImage, Point2, save_pgm, warp_perspective
from .segmentation import (
    DEFAULT_CANONICAL_SIZE,
    DEFAULT_MM_PER_PIXEL,
    TargetTemplate,
    build_template,
)

_PAPER = 250
_DARK_INK = 60
_GRID_INK = 200
_DIAMOND_INK = 160
_HOLE_CORE = (15, 36)  # rng.integers bounds: intensity 25 +/- 10
_COLLAR = (236, 249)
_SECTORS = 16

_GRID_PITCH_MM = 25.0
# Print-texture speckle: one mark attempt per this many px^2, drawn
# under the structural ink. Uniform paper plus a repeating grid gives
# the descriptor matcher nothing unique to lock onto (every crossing
# looks like every other and the ratio test rejects them all); the
# speckle gives each neighborhood a unique signature. Intensities stay
# at least the corner-detector threshold below the paper so marks stay
# detectable under sensor noise, and far above the hole mask band.
_SPECKLE_DENSITY = 300
_SPECKLE_INK = (195, 228)
_SPECKLE_SEED = 2026


def _fiducial_cutouts(corner: int) -> list[tuple[float, float, float, float]]:
    """White cutout rectangles (fractions of the block) per corner, all distinct."""
    if corner == 0:  # top-left: large block plus two bars
        return [(0.15, 0.15, 0.50, 0.50), (0.60, 0.15, 0.85, 0.30), (0.15, 0.65, 0.30, 0.85)]
    if corner == 1:  # top-right: three dots of differing size
        return [(0.15, 0.15, 0.40, 0.40), (0.60, 0.25, 0.80, 0.45), (0.25, 0.60, 0.55, 0.90)]
    if corner == 2:  # bottom-left: two horizontal bars, offset
        return [(0.15, 0.20, 0.85, 0.35), (0.15, 0.55, 0.50, 0.70)]
    # bottom-right: one wide bar and one small square
    return [(0.20, 0.20, 0.80, 0.40), (0.55, 0.60, 0.80, 0.85)]


def render_template(
    canonical_size: int = DEFAULT_CANONICAL_SIZE,
    mm_per_pixel: float = DEFAULT_MM_PER_PIXEL,
) -> TargetTemplate:
    """Render the blank canonical target and precompute its features."""
    size = int(canonical_size)
    if size < 256:
        raise ImageTooSmallError(f"canonical_size must be >= 256, got {size}")
    px = np.full((size, size), _PAPER, dtype=np.uint8)

    margin = max(2, round(size * 0.015))
    band = max(4, round(size * 0.0125))
    inner = margin + band

    # Speckle goes down first; every structural mark prints over it.
    rng = np.random.default_rng(_SPECKLE_SEED)
    speckle_pad = inner + 2
    for _ in range(round(size * size / _SPECKLE_DENSITY)):
        x = int(rng.integers(speckle_pad, size - speckle_pad - 4))
        y = int(rng.integers(speckle_pad, size - speckle_pad - 4))
        w = int(rng.integers(2, 5))
        h = int(rng.integers(2, 5))
        px[y : y + h, x : x + w] = int(rng.integers(*_SPECKLE_INK))

    # Grid next; fiducials and the aim mark draw over it.
    pitch = max(8, round(_GRID_PITCH_MM / mm_per_pixel))
    center = size // 2
    for offset in range(0, center, pitch):
        for line in ({center - offset, center + offset}):
            if inner <= line < size - inner - 1:
                px[inner : size - inner, line : line + 2] = _GRID_INK
                px[line : line + 2, inner : size - inner] = _GRID_INK

    # Border frame.
    px[margin : size - margin, margin : margin + band] = _DARK_INK
    px[margin : size - margin, size - margin - band : size - margin] = _DARK_INK
    px[margin : margin + band, margin : size - margin] = _DARK_INK
    px[size - margin - band : size - margin, margin : size - margin] = _DARK_INK

    # Corner fiducials.
    block = round(size * 0.08)
    inset = inner + round(size * 0.0225)
    origins = [
        (inset, inset),
        (size - inset - block, inset),
        (inset, size - inset - block),
        (size - inset - block, size - inset - block),
    ]
    for corner, (ox, oy) in enumerate(origins):
        px[oy : oy + block, ox : ox + block] = _DARK_INK
        for fx0, fy0, fx1, fy1 in _fiducial_cutouts(corner):
            px[
                oy + round(fy0 * block) : oy + round(fy1 * block),
                ox + round(fx0 * block) : ox + round(fx1 * block),
            ] = _PAPER

    # Edge tick bars: 1 top, 2 right, 3 bottom, 4 left, breaking the
    # remaining symmetry for coarse orientation sanity checks by eye.
    bar_len = max(6, round(size * 0.04))
    bar_thick = max(3, round(size * 0.0075))
    gap = bar_len // 2
    for edge, count in ((0, 1), (1, 2), (2, 3), (3, 4)):
        span = count * bar_len + (count - 1) * gap
        start = center - span // 2
        for i in range(count):
            a = start + i * (bar_len + gap)
            b = a + bar_len
            offs = inner + 4
            if edge == 0:
                px[offs : offs + bar_thick, a:b] = _GRID_INK
            elif edge == 2:
                px[size - offs - bar_thick : size - offs, a:b] = _GRID_INK
            elif edge == 3:
                px[a:b, offs : offs + bar_thick] = _GRID_INK
            else:
                px[a:b, size - offs - bar_thick : size - offs] = _GRID_INK

    # Central diamond aim mark, centered on the exact canonical center.
    half_diag = max(10, round(size * 0.075))
    ys, xs = np.mgrid[0:size, 0:size]
    diamond = np.abs(xs - size / 2.0) + np.abs(ys - size / 2.0) <= half_diag
    px[diamond] = _DIAMOND_INK

    return build_template(GrayImage(px), mm_per_pixel)


@dataclass(frozen=True)
class SequenceSpec:
    seed: int
    iterations: int = 2
    holes_min: int = 3
    holes_max: int = 4
    hole_radius_px: float = 5.5
    perspective_magnitude: float = 0.08
    noise_sigma: float = 4.0
    group_center_offset_mm: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not 0 <= self.holes_min <= self.holes_max:
            raise ValueError(
                f"empty hole-count range [{self.holes_min}, {self.holes_max}]"
            )
        if self.hole_radius_px <= 0:
            raise ValueError(f"hole_radius_px must be positive, got {self.hole_radius_px}")
        if not 0.0 <= self.perspective_magnitude <= 0.2:
            raise ValueError(
                f"perspective_magnitude must be in [0, 0.2], got {self.perspective_magnitude}"
            )
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")


@dataclass(frozen=True)
class TruthHole:
    bbox: BBox
    iteration: int


@dataclass(frozen=True)
class TruthImage:
    iteration: int
    file: str
    homography_canonical_to_raw: Homography


@dataclass(frozen=True)
class GroundTruth:
    template_ref: str
    canonical_size: int
    mm_per_pixel: float
    images: list[TruthImage] = field(default_factory=list)
    holes: list[TruthHole] = field(default_factory=list)

    def holes_through(self, iteration: int) -> list[TruthHole]:
        """All truth holes present on the target at the given iteration."""
        return [h for h in self.holes if h.iteration <= iteration]


def _draw_center(
    rng: np.random.Generator,
    aim: tuple[float, float],
    sigma_px: float,
    radius: float,
    bounds: tuple[float, float],
    placed: list[BBox],
) -> tuple[float, float, BBox]:
    """One hole center; resample on leaving the safe zone or on collision.

    Collision means IoU >= 0.5 against a hole placed earlier in the SAME
    iteration; near-overlaps across iterations are deliberate.
    """
    lo, hi = bounds
    for _ in range(1000):
        cx, cy = rng.normal(0.0, sigma_px, size=2) + aim
        if not (lo <= cx <= hi and lo <= cy <= hi):
            continue
        box = BBox(cx - radius, cy - radius, cx + radius, cy + radius)
        if any(iou(box, other) >= 0.5 for other in placed):
            continue
        return cx, cy, box
    raise RuntimeError("could not place a hole after 1000 attempts")


def _punch_hole(
    canvas: np.ndarray, rng: np.random.Generator, cx: float, cy: float, radius: float
) -> None:
    """Dark ragged core inside a bright torn-paper collar, drawn over everything."""
    core_jitter = rng.random(_SECTORS)
    size = canvas.shape[0]
    reach = radius + 2.5
    x0 = max(0, int(math.floor(cx - reach)))
    y0 = max(0, int(math.floor(cy - reach)))
    x1 = min(size, int(math.ceil(cx + reach)) + 1)
    y1 = min(size, int(math.ceil(cy + reach)) + 1)
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx = xs - cx
    dy = ys - cy
    rho = np.hypot(dx, dy)
    sector = (
        np.floor((np.arctan2(dy, dx) + math.pi) / (2.0 * math.pi / _SECTORS)).astype(int)
        % _SECTORS
    )
    # The collar tracks the ragged core edge at constant width, so the
    # bright channel a later shot leaves between its own core and a
    # neighboring hole never thins below 1.2 px in any sector; thinner
    # sectors would fuse with the neighbor after two resampling passes.
    core = rho <= radius - 0.5 + core_jitter[sector]
    collar = ~core & (rho <= radius + 0.7 + core_jitter[sector])
    patch = canvas[y0:y1, x0:x1]
    patch[collar] = rng.integers(*_COLLAR, size=int(collar.sum()))
    patch[core] = rng.integers(*_HOLE_CORE, size=int(core.sum()))


def _snapshot(
    canvas: np.ndarray, rng: np.random.Generator, spec: SequenceSpec, size: int
) -> tuple[GrayImage, Homography]:
    """Raw image of the current canvas from one random viewpoint."""
    magnitude = spec.perspective_magnitude
    if magnitude == 0.0:
        raw = canvas.copy()
        homography = Homography.identity()
    else:
        jitter_px = magnitude * size
        pad = int(math.ceil(jitter_px))
        out = size + 2 * pad
        jitter = rng.uniform(-jitter_px, jitter_px, size=(4, 2))
        corners = [(0.0, 0.0), (float(size), 0.0), (float(size), float(size)), (0.0, float(size))]
        pairs = [
            (Point2(x, y), Point2(x + pad + jx, y + pad + jy))
            for (x, y), (jx, jy) in zip(corners, jitter)
        ]
        homography = estimate_homography_dlt(pairs)
        raw = warp_perspective(GrayImage(canvas), homography, out, out).pixels
    if spec.noise_sigma > 0:
        noisy = raw.astype(np.float64) + rng.normal(0.0, spec.noise_sigma, raw.shape)
        raw = np.clip(np.floor(noisy + 0.5), 0, 255).astype(np.uint8)
    return GrayImage(raw), homography


def generate_sequence(
    spec: SequenceSpec, template: TargetTemplate
) -> tuple[list[GrayImage], GroundTruth]:
    """All raw images of one firing sequence plus exhaustive ground truth."""
    rng = np.random.default_rng(spec.seed)
    size = template.canonical_size
    mmpp = template.mm_per_pixel
    canvas = template.image.pixels.copy()

    sigma_px = 15.0 / mmpp
    aim = (
        template.aim_point.x + spec.group_center_offset_mm[0] / mmpp,
        template.aim_point.y + spec.group_center_offset_mm[1] / mmpp,
    )
    # Keep holes off the border and fiducial ink so a dark core never
    # touches a dark structural component. With sigma = 30 px on an
    # 800 px target this margin sits beyond 9 sigma; it exists to keep
    # small canvases honest.
    margin = max(2, round(size * 0.015)) + max(4, round(size * 0.0125))
    keep_out = margin + round(size * 0.0225) + round(size * 0.08) + 8
    bounds = (float(keep_out), float(size - keep_out))

    images: list[GrayImage] = []
    truth_images: list[TruthImage] = []
    holes: list[TruthHole] = []
    radius = spec.hole_radius_px
    for iteration in range(1, spec.iterations + 1):
        count = int(rng.integers(spec.holes_min, spec.holes_max + 1))
        placed: list[BBox] = []
        for _ in range(count):
            cx, cy, box = _draw_center(rng, aim, sigma_px, radius, bounds, placed)
            placed.append(box)
            holes.append(TruthHole(box, iteration))
            _punch_hole(canvas, rng, cx, cy, radius)
        raw, homography = _snapshot(canvas, rng, spec, size)
        images.append(raw)
        truth_images.append(TruthImage(iteration, f"iter_{iteration}.pgm", homography))

    truth = GroundTruth("template.pgm", size, mmpp, truth_images, holes)
    return images, truth


def save_sequence(
    directory: str | Path,
    images: list[GrayImage],
    truth: GroundTruth,
    template_ref: str | None = None,
) -> Path:
    """Write iter_<k>.pgm files and truth.json; returns the truth path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for image, meta in zip(images, truth.images):
        save_pgm(image, directory / meta.file)
    doc = {
        "template": template_ref if template_ref is not None else truth.template_ref,
        "canonical_size": truth.canonical_size,
        "mm_per_pixel": truth.mm_per_pixel,
        "images": [
            {
                "iteration": m.iteration,
                "file": m.file,
                "homography_canonical_to_raw": m.homography_canonical_to_raw.as_flat_list(),
            }
            for m in truth.images
        ],
        "holes": [
            {"bbox": h.bbox.as_list(), "iteration": h.iteration} for h in truth.holes
        ],
    }
    truth_path = directory / "truth.json"
    truth_path.write_text(json.dumps(doc, indent=2) + "\n")
    return truth_path


def load_ground_truth(path: str | Path) -> GroundTruth:
    """Read a truth.json written by save_sequence."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaViolationError("$", f"unparseable ground truth {path}: {exc}")
    if not isinstance(doc, dict):
        raise SchemaViolationError("$", "ground truth must be a JSON object")
    for key in ("template", "canonical_size", "mm_per_pixel", "images", "holes"):
        if key not in doc:
            raise SchemaViolationError(key, "missing required field")
    images = []
    for i, meta in enumerate(doc["images"]):
        flat = meta.get("homography_canonical_to_raw")
        if not isinstance(flat, list) or len(flat) != 9:
            raise SchemaViolationError(
                f"images[{i}].homography_canonical_to_raw", "expected 9 numbers"
            )
        images.append(
            TruthImage(int(meta["iteration"]), str(meta["file"]), Homography.from_flat(flat))
        )
    holes = []
    for i, entry in enumerate(doc["holes"]):
        box = entry.get("bbox")
        if not isinstance(box, list) or len(box) != 4:
            raise SchemaViolationError(f"holes[{i}].bbox", "expected 4 numbers")
        holes.append(TruthHole(BBox.from_list(box), int(entry["iteration"])))
    return GroundTruth(
        str(doc["template"]),
        int(doc["canonical_size"]),
        float(doc["mm_per_pixel"]),
        images,
        holes,
    )
