import pytest

from rbcscan.detector import (
    FRAMEWORK_BENCHMARKS,
    DetectorProfile,
    SyntheticScene,
    ap_at,
    builtin_profile,
    builtin_profile_names,
    detections_to_candidates,
    sample_detections,
)
from rbcscan.errors import DomainError, UsageError
from rbcscan.geometry import CellGrid, bbox_center, cell_center, cell_of_point
from rbcscan.metrics import BBox, Detection, GroundTruthObject

GRID = CellGrid(rows=8, cols=8, image_width=1280, image_height=720)


def _profile(knots, latency=0.2):
    return DetectorProfile(name="test", per_image_latency_s=latency, ap_vs_iou=tuple(knots))


def _receiver_in_cell(grid, cell, image_id, w=124.0, h=62.0):
    cx, cy = cell_center(grid, cell)
    box = BBox(cx - w / 2, cy - h / 2, w, h)
    return GroundTruthObject(image_id=image_id, bbox=box)


def _detected_cell(det, grid):
    return cell_of_point(grid, *bbox_center(det.bbox))


class TestApAt:
    def test_exact_at_knots(self):
        profile = _profile([(0.5, 0.7), (0.75, 0.6), (0.95, 0.2)])
        assert ap_at(profile, 0.5) == 0.7
        assert ap_at(profile, 0.75) == 0.6
        assert ap_at(profile, 0.95) == 0.2

    def test_linear_between_knots(self):
        profile = _profile([(0.5, 0.8), (0.7, 0.4)])
        assert ap_at(profile, 0.6) == pytest.approx(0.6, abs=1e-12)
        assert ap_at(profile, 0.55) == pytest.approx(0.7, abs=1e-12)

    def test_out_of_range_rejected(self):
        profile = _profile([(0.5, 0.7), (0.95, 0.2)])
        with pytest.raises(DomainError):
            ap_at(profile, 0.4)
        with pytest.raises(DomainError):
            ap_at(profile, 0.96)

    def test_single_knot_profile_is_constant(self):
        profile = _profile([(0.5, 0.33)])
        assert ap_at(profile, 0.5) == 0.33
        with pytest.raises(DomainError):
            ap_at(profile, 0.51)


class TestProfileValidation:
    def test_rejects_rising_ap(self):
        with pytest.raises(DomainError):
            _profile([(0.5, 0.6), (0.6, 0.7)])

    def test_rejects_non_increasing_thresholds(self):
        with pytest.raises(DomainError):
            _profile([(0.6, 0.7), (0.5, 0.6)])

    def test_rejects_ap_outside_unit_interval(self):
        with pytest.raises(DomainError):
            _profile([(0.5, 1.2)])

    def test_rejects_negative_latency(self):
        with pytest.raises(DomainError):
            _profile([(0.5, 0.5)], latency=-1)

    def test_rejects_empty_curve(self):
        with pytest.raises(DomainError):
            _profile([])

    def test_rejects_bad_distance_entry(self):
        with pytest.raises(DomainError):
            DetectorProfile(
                name="x", per_image_latency_s=0.1, ap_vs_iou=((0.5, 0.5),),
                ap_vs_distance=((0.0, "1280x720", 0.5),),
            )


class TestBuiltinProfile:
    def test_listed_and_loadable(self):
        assert "mask-rcnn-smartphone" in builtin_profile_names()
        profile = builtin_profile("mask-rcnn-smartphone")
        assert profile.name == "mask-rcnn-smartphone"

    def test_anchor_values(self):
        profile = builtin_profile()
        assert profile.per_image_latency_s == 0.2
        assert ap_at(profile, 0.5) == 0.7
        assert (350, "1280x720", 0.315) in profile.ap_vs_distance

    def test_mean_over_standard_thresholds(self):
        profile = builtin_profile()
        values = [ap for _, ap in profile.ap_vs_iou]
        assert len(values) == 10
        assert abs(sum(values) / 10 - 0.5766) < 1e-4

    def test_monotone_non_increasing(self):
        profile = builtin_profile()
        values = [ap for _, ap in profile.ap_vs_iou]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_unknown_name_rejected(self):
        with pytest.raises(UsageError):
            builtin_profile("no-such-profile")


class TestFrameworkBenchmarks:
    def test_reference_rows(self):
        by_name = {b.name: b for b in FRAMEWORK_BENCHMARKS}
        mask = by_name["mask-rcnn"]
        assert (mask.coco_map, mask.coco_ap_small, mask.per_image_latency_s) == (0.382, 0.201, 0.195)
        assert by_name["yolov3"].per_image_latency_s == 0.051
        assert by_name["faster-rcnn"].backbone == "ResNet-101-FPN"
        assert by_name["ssd513"].coco_ap_small == 0.102


class TestSyntheticScene:
    def test_rejects_box_outside_image(self):
        gt = GroundTruthObject(image_id=0, bbox=BBox(1200, 700, 124, 62))
        with pytest.raises(DomainError):
            SyntheticScene(grid=GRID, receivers=((gt, 120.0),))

    def test_rejects_non_positive_distance(self):
        gt = _receiver_in_cell(GRID, 0, image_id=0)
        with pytest.raises(DomainError):
            SyntheticScene(grid=GRID, receivers=((gt, 0.0),))


class TestSampleDetections:
    def _scene(self, cells, distance=120.0):
        receivers = tuple(
            (_receiver_in_cell(GRID, cell, image_id=i), distance) for i, cell in enumerate(cells)
        )
        return SyntheticScene(grid=GRID, receivers=receivers)

    def test_always_correct_profile(self):
        scene = self._scene([0, 17, 36, 63])
        dets = sample_detections(scene, _profile([(0.5, 1.0)]), 0.5, rng_seed=1)
        for det, (gt, _) in zip(dets, scene.receivers):
            assert _detected_cell(det, GRID) == _detected_cell_of_gt(gt)
            assert 0.8 <= det.score <= 1.0

    def test_never_correct_profile(self):
        scene = self._scene([0, 17, 36, 63] * 25)
        dets = sample_detections(scene, _profile([(0.5, 0.0)]), 0.5, rng_seed=2)
        for det, (gt, _) in zip(dets, scene.receivers):
            assert _detected_cell(det, GRID) != _detected_cell_of_gt(gt)
            assert 0.5 <= det.score <= 0.8

    def test_one_detection_per_receiver(self):
        scene = self._scene([1, 2, 3])
        dets = sample_detections(scene, builtin_profile(), 0.5, rng_seed=3)
        assert [d.image_id for d in dets] == [0, 1, 2]

    def test_deterministic_given_seed(self):
        scene = self._scene([5, 6, 7, 8])
        a = sample_detections(scene, builtin_profile(), 0.5, rng_seed=11)
        b = sample_detections(scene, builtin_profile(), 0.5, rng_seed=11)
        assert a == b
        c = sample_detections(scene, builtin_profile(), 0.5, rng_seed=12)
        assert a != c

    def test_correct_fraction_converges_to_profile_ap(self):
        import numpy as np

        rng = np.random.Generator(np.random.PCG64(99))
        cells = rng.integers(0, GRID.n_cells, size=100_000)
        scene = self._scene(cells.tolist())
        dets = sample_detections(scene, builtin_profile(), 0.5, rng_seed=4)
        hits = sum(
            _detected_cell(det, GRID) == int(cell) for det, cell in zip(dets, cells)
        )
        fraction = hits / len(cells)
        assert abs(fraction - 0.70) <= 0.01 * 0.70

    def test_single_cell_grid_needs_certain_profile(self):
        grid = CellGrid(1, 1, 200, 100)
        gt = GroundTruthObject(image_id=0, bbox=BBox(50, 25, 100, 50))
        scene = SyntheticScene(grid=grid, receivers=((gt, 120.0),))
        with pytest.raises(UsageError):
            sample_detections(scene, _profile([(0.5, 0.5)]), 0.5, rng_seed=1)
        dets = sample_detections(scene, _profile([(0.5, 1.0)]), 0.5, rng_seed=1)
        assert len(dets) == 1


def _detected_cell_of_gt(gt):
    return cell_of_point(GRID, *bbox_center(gt.bbox))


class TestDetectionsToCandidates:
    def _det(self, cell, score, image_id="img"):
        cx, cy = cell_center(GRID, cell)
        return Detection(image_id=image_id, bbox=BBox(cx - 10, cy - 5, 20, 10), score=score)

    def test_single_detection(self):
        assert detections_to_candidates([self._det(12, 0.9)], GRID) == [12]

    def test_ordered_by_descending_score(self):
        dets = [self._det(3, 0.9), self._det(7, 0.95)]
        assert detections_to_candidates(dets, GRID) == [7, 3]

    def test_same_cell_deduplicated(self):
        dets = [self._det(5, 0.9), self._det(5, 0.8)]
        assert detections_to_candidates(dets, GRID) == [5]

    def test_score_tie_keeps_input_order(self):
        dets = [self._det(2, 0.9), self._det(9, 0.9)]
        assert detections_to_candidates(dets, GRID) == [2, 9]

    def test_empty_input(self):
        assert detections_to_candidates([], GRID) == []

    def test_mixed_images_rejected(self):
        dets = [self._det(1, 0.9, image_id="a"), self._det(2, 0.8, image_id="b")]
        with pytest.raises(UsageError):
            detections_to_candidates(dets, GRID)
