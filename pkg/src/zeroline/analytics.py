"""Shot-group statistics and sight-adjustment arithmetic.

Coordinates follow the canonical image frame (x right, y down), so the
elevation axis flips sign on the way out: a group that prints low sits
at larger y and needs a positive (up) correction. Windage is positive
right on both sides of the conversion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .detection import Detection
from .errors import EmptyGroupError, NonPositiveDistanceError
from .imagecore import Point2

# One minute of angle in radians; exact small-angle chord via tan.
_MOA_RADIANS = math.pi / 10800.0


@dataclass(frozen=True)
class GroupStats:
    center_px: Point2
    center_mm: Point2
    extreme_spread_mm: float
    mean_radius_mm: float
    count: int


@dataclass(frozen=True)
class Adjustment:
    windage_clicks: int  # positive = right
    elevation_clicks: int  # positive = up
    residual_mm: tuple[float, float]  # correction minus offset, per axis


def mm_per_moa(distance_m: float) -> float:
    """Millimeters subtended by one minute of angle at the given range."""
    if distance_m <= 0:
        raise NonPositiveDistanceError(f"distance_m must be positive, got {distance_m}")
    return distance_m * 1000.0 * math.tan(_MOA_RADIANS)


def group_stats(new_holes: list[Detection], mm_per_pixel: float) -> GroupStats:
    """Center, extreme spread, and mean radius of one iteration's group."""
    if not new_holes:
        raise EmptyGroupError("group statistics need at least one hole")
    if mm_per_pixel <= 0:
        raise ValueError(f"mm_per_pixel must be positive, got {mm_per_pixel}")
    centers = [d.bbox.center for d in new_holes]
    cx = sum(c.x for c in centers) / len(centers)
    cy = sum(c.y for c in centers) / len(centers)

    spread_px = 0.0
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            spread_px = max(spread_px, math.dist(centers[i], centers[j]))
    mean_radius_px = sum(math.dist(c, (cx, cy)) for c in centers) / len(centers)

    return GroupStats(
        center_px=Point2(cx, cy),
        center_mm=Point2(cx * mm_per_pixel, cy * mm_per_pixel),
        extreme_spread_mm=spread_px * mm_per_pixel,
        mean_radius_mm=mean_radius_px * mm_per_pixel,
        count=len(new_holes),
    )


def _round_half_away(value: float) -> int:
    return int(math.copysign(math.floor(abs(value) + 0.5), value))


def sight_adjustment(
    group_center: Point2,
    point_of_aim: Point2,
    mm_per_pixel: float,
    distance_m: float,
    windage_moa_per_click: float,
    elevation_moa_per_click: float,
) -> Adjustment:
    """Click recommendation moving the group center onto the point of aim.

    Offsets are aim minus center in mm, with the elevation axis negated
    into up-positive terms. Clicks round half away from zero so left and
    right (and up and down) behave symmetrically; the residual is the
    signed overshoot of the rounded correction, at most half a click per
    axis.
    """
    if distance_m <= 0:
        raise NonPositiveDistanceError(f"distance_m must be positive, got {distance_m}")
    if windage_moa_per_click <= 0 or elevation_moa_per_click <= 0:
        raise ValueError("click sizes must be positive")
    if mm_per_pixel <= 0:
        raise ValueError(f"mm_per_pixel must be positive, got {mm_per_pixel}")

    offset_right_mm = (point_of_aim.x - group_center.x) * mm_per_pixel
    offset_up_mm = (group_center.y - point_of_aim.y) * mm_per_pixel

    moa_mm = mm_per_moa(distance_m)
    windage_click_mm = moa_mm * windage_moa_per_click
    elevation_click_mm = moa_mm * elevation_moa_per_click

    windage_clicks = _round_half_away(offset_right_mm / windage_click_mm)
    elevation_clicks = _round_half_away(offset_up_mm / elevation_click_mm)

    return Adjustment(
        windage_clicks=windage_clicks,
        elevation_clicks=elevation_clicks,
        residual_mm=(
            windage_clicks * windage_click_mm - offset_right_mm,
            elevation_clicks * elevation_click_mm - offset_up_mm,
        ),
    )
