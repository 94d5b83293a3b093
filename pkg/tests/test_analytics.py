import math

import numpy as np
import pytest

from zeroline.analytics import group_stats, mm_per_moa, sight_adjustment
from zeroline.detection import Detection
from zeroline.errors import EmptyGroupError, NonPositiveDistanceError
from zeroline.geometry import BBox
from zeroline.imagecore import Point2


def hole_at(x, y, half=4.0):
    return Detection(bbox=BBox(x - half, y - half, x + half, y + half), confidence=0.9)


class TestMmPerMoa:
    def test_matches_independent_trig_at_25m(self):
        # one arcminute subtends d * tan(pi / (180 * 60)) at distance d
        oracle = 25.0 * 1000.0 * math.tan(math.pi / 10800.0)
        assert mm_per_moa(25.0) == pytest.approx(oracle, abs=1e-12)
        assert mm_per_moa(25.0) == pytest.approx(7.2722, abs=1e-3)

    def test_scales_linearly_with_distance(self):
        assert mm_per_moa(50.0) == pytest.approx(2.0 * mm_per_moa(25.0), rel=1e-12)
        assert mm_per_moa(100.0) == pytest.approx(29.0889, abs=1e-3)

    def test_rejects_nonpositive_distance(self):
        with pytest.raises(NonPositiveDistanceError):
            mm_per_moa(0.0)
        with pytest.raises(NonPositiveDistanceError):
            mm_per_moa(-25.0)


class TestGroupStats:
    def test_single_hole(self):
        stats = group_stats([hole_at(100, 60)], mm_per_pixel=0.5)
        assert stats.center_px == Point2(100.0, 60.0)
        assert stats.center_mm == Point2(50.0, 30.0)
        assert stats.extreme_spread_mm == 0.0
        assert stats.mean_radius_mm == 0.0
        assert stats.count == 1

    def test_square_group_closed_form(self):
        # 20 px square at 0.5 mm/px: diagonal 20*sqrt(2) px -> 14.142 mm,
        # every corner sqrt(2)*10 px from the center -> 7.071 mm
        holes = [hole_at(90, 90), hole_at(110, 90), hole_at(110, 110), hole_at(90, 110)]
        stats = group_stats(holes, mm_per_pixel=0.5)
        assert stats.center_px == Point2(100.0, 100.0)
        assert stats.extreme_spread_mm == pytest.approx(10.0 * math.sqrt(2), abs=1e-9)
        assert stats.mean_radius_mm == pytest.approx(5.0 * math.sqrt(2), abs=1e-9)
        assert stats.count == 4

    def test_pair_spread_is_distance(self):
        stats = group_stats([hole_at(100, 100), hole_at(106, 108)], mm_per_pixel=0.5)
        assert stats.extreme_spread_mm == pytest.approx(5.0, abs=1e-9)
        assert stats.mean_radius_mm == pytest.approx(2.5, abs=1e-9)

    def test_translation_equivariance(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            pts = rng.uniform(50, 150, size=(4, 2))
            dx, dy = rng.uniform(-40, 40, size=2)
            base = group_stats([hole_at(x, y) for x, y in pts], mm_per_pixel=0.5)
            moved = group_stats([hole_at(x + dx, y + dy) for x, y in pts], mm_per_pixel=0.5)
            assert moved.extreme_spread_mm == pytest.approx(base.extreme_spread_mm, abs=1e-9)
            assert moved.mean_radius_mm == pytest.approx(base.mean_radius_mm, abs=1e-9)
            assert moved.center_px.x == pytest.approx(base.center_px.x + dx, abs=1e-9)
            assert moved.center_px.y == pytest.approx(base.center_px.y + dy, abs=1e-9)

    def test_rejects_empty_group(self):
        with pytest.raises(EmptyGroupError):
            group_stats([], mm_per_pixel=0.5)

    def test_rejects_nonpositive_scale(self):
        with pytest.raises(ValueError):
            group_stats([hole_at(10, 10)], mm_per_pixel=0.0)


class TestSightAdjustment:
    def adjust(self, center, aim, *, mmpp=0.5, dist=25.0, w=0.5, e=0.5):
        return sight_adjustment(Point2(*center), Point2(*aim), mmpp, dist, w, e)

    def test_centered_group_needs_nothing(self):
        adj = self.adjust((400, 400), (400, 400))
        assert adj.windage_clicks == 0
        assert adj.elevation_clicks == 0
        assert adj.residual_mm == (0.0, 0.0)

    def test_low_group_corrects_up(self):
        # 14.54 mm low at 1.0 MOA clicks: 14.54 / 7.2722 = 1.999 -> +2 up
        adj = self.adjust((400, 400 + 14.54 / 0.5), (400, 400), w=1.0, e=1.0)
        assert adj.elevation_clicks == 2
        assert adj.windage_clicks == 0

    def test_right_group_corrects_left_with_residual(self):
        # 3.6 mm right at half-MOA clicks (3.636 mm each): one click left
        # overshoots by 0.036 mm
        adj = self.adjust((400 + 3.6 / 0.5, 400), (400, 400))
        assert adj.windage_clicks == -1
        assert adj.residual_mm[0] == pytest.approx(-0.0361, abs=1e-3)

    def test_half_click_rounds_away_from_zero(self):
        half = mm_per_moa(25.0) * 0.5 / 2.0
        right = self.adjust((400 - half / 0.5, 400), (400, 400))
        left = self.adjust((400 + half / 0.5, 400), (400, 400))
        assert right.windage_clicks == 1
        assert left.windage_clicks == -1

    def test_residual_bounded_by_half_click(self):
        rng = np.random.default_rng(7)
        click_w = mm_per_moa(25.0) * 0.5
        click_e = mm_per_moa(25.0) * 0.5
        for _ in range(1000):
            cx, cy = rng.uniform(200, 600, size=2)
            adj = self.adjust((cx, cy), (400, 400))
            assert abs(adj.residual_mm[0]) <= 0.5 * click_w + 1e-9
            assert abs(adj.residual_mm[1]) <= 0.5 * click_e + 1e-9

    def test_residual_is_signed_overshoot(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            cx = rng.uniform(200, 600)
            adj = self.adjust((cx, 400), (400, 400))
            offset_right = (400 - cx) * 0.5
            corrected = adj.windage_clicks * mm_per_moa(25.0) * 0.5
            assert adj.residual_mm[0] == pytest.approx(corrected - offset_right, abs=1e-9)

    def test_rejects_bad_config(self):
        with pytest.raises(NonPositiveDistanceError):
            self.adjust((0, 0), (0, 0), dist=0.0)
        with pytest.raises(ValueError):
            self.adjust((0, 0), (0, 0), w=0.0)
        with pytest.raises(ValueError):
            self.adjust((0, 0), (0, 0), mmpp=-1.0)
