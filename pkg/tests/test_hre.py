import math

import numpy as np
import pytest
import torch

from radmesh.errors import ContractViolationError
from radmesh.hre import (
    CoarseCenter,
    CoarseLocalizer,
    OracleLocalizer,
    VoxelSegmenter,
    cfar_extract,
    combine_view_centers,
    crop_roi,
    extract,
    hre_loss,
    loc_loss,
    project_views,
    seg_loss,
    segment_voxels,
)
from radmesh.hre.roi import ROI_DIMS, RoiVolume, crop_at_origin
from radmesh.scene_sim import GridSpec, voxelize_points
from radmesh.scene_sim.dataset import TINY_GRID, build_sequence, make_subjects, profile


class TestProjectViews:
    def test_all_zero(self):
        xy, yz, xz = project_views(np.zeros((5, 6, 7)))
        assert xy.shape == (5, 6) and yz.shape == (6, 7) and xz.shape == (5, 7)
        assert xy.sum() == yz.sum() == xz.sum() == 0

    def test_single_impulse(self):
        frame = np.zeros((5, 6, 7))
        frame[2, 3, 4] = 7.0
        xy, yz, xz = project_views(frame)
        assert xy[2, 3] == 7.0 and xy.sum() == 7.0
        assert yz[3, 4] == 7.0 and yz.sum() == 7.0
        assert xz[2, 4] == 7.0 and xz.sum() == 7.0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(2)
        frame = rng.random((8, 7, 6))
        xy, yz, xz = project_views(frame)
        for i in range(8):
            for j in range(7):
                assert xy[i, j] == max(frame[i, j, k] for k in range(6))
        for j in range(7):
            for k in range(6):
                assert yz[j, k] == max(frame[i, j, k] for i in range(8))
        for i in range(8):
            for k in range(6):
                assert xz[i, k] == max(frame[i, j, k] for j in range(7))


class TestCombineCenters:
    def test_consistent_views_identity(self):
        np.testing.assert_allclose(
            combine_view_centers((10, 20), (20, 5), (10, 5)), [10, 20, 5])

    def test_shared_axis_average(self):
        np.testing.assert_allclose(
            combine_view_centers((10, 20), (20, 5), (14, 5)), [12, 20, 5])

    def test_localizer_clamps_to_grid(self):
        grid = GridSpec(dims=(10, 10, 10), origin=(0, 0, 0),
                        voxel_size=(0.1, 0.1, 0.1))
        c = CoarseCenter(grid.clamp_world([5.0, -3.0, 0.5]))
        assert grid.contains_world(c.p_hat)


class TestCropRoi:
    def test_interior_crop(self):
        grid = TINY_GRID
        frame = np.zeros(grid.dims, dtype=np.float32)
        center = CoarseCenter(grid.voxel_center([30, 27, 15]))
        roi = crop_roi(frame, center, grid)
        np.testing.assert_array_equal(roi.roi_origin_voxel,
                                      [30 - 16, 27 - 16, 15 - 12])
        assert roi.values.shape == ROI_DIMS

    def test_corner_shifts_inward(self):
        grid = TINY_GRID
        frame = np.zeros(grid.dims, dtype=np.float32)
        center = CoarseCenter(grid.voxel_center([0, 0, 0]))
        roi = crop_roi(frame, center, grid)
        np.testing.assert_array_equal(roi.roi_origin_voxel, [0, 0, 0])
        assert roi.values.shape == ROI_DIMS

    def test_impulse_bookkeeping(self):
        grid = TINY_GRID
        frame = np.zeros(grid.dims, dtype=np.float32)
        impulse = (41, 33, 20)
        frame[impulse] = 9.0
        center = CoarseCenter(grid.voxel_center([40, 30, 18]))
        roi = crop_roi(frame, center, grid)
        local = np.asarray(impulse) - roi.roi_origin_voxel
        assert roi.values[tuple(local)] == 9.0

    def test_roi_mapping_is_bijective(self):
        grid = TINY_GRID
        frame = np.arange(np.prod(grid.dims), dtype=np.float32).reshape(grid.dims)
        center = CoarseCenter(grid.voxel_center([25, 30, 14]))
        roi = crop_roi(frame, center, grid)
        seen = set()
        for local in np.ndindex(*ROI_DIMS):
            parent = tuple(np.asarray(local) + roi.roi_origin_voxel)
            assert roi.values[local] == frame[parent]
            seen.add(parent)
        assert len(seen) == int(np.prod(ROI_DIMS))


class TestLosses:
    def test_loc_zero(self):
        assert loc_loss([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0

    def test_loc_345(self):
        assert loc_loss([3.0, 4.0, 0.0], [0.0, 0.0, 0.0]) == pytest.approx(25.0)

    def test_loc_matches_elementwise_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            a, b = rng.normal(size=3), rng.normal(size=3)
            oracle = sum((float(x) - float(y)) ** 2 for x, y in zip(a, b))
            assert loc_loss(a, b) == pytest.approx(oracle, rel=1e-12)

    def test_seg_perfect_prediction(self):
        g = np.zeros((4, 4, 4))
        g[1:3, 1:3, 1:3] = 1.0
        total, bce, dice = seg_loss(g.copy(), g)
        assert dice == pytest.approx(0.0, abs=1e-9)
        assert bce <= 1e-5

    def test_seg_uniform_half_closed_form(self):
        rng = np.random.default_rng(0)
        g = (rng.random((6, 5, 4)) < 0.2).astype(np.float64)
        n = g.size
        m = g.sum()
        r = np.full_like(g, 0.5)
        total, bce, dice = seg_loss(r, g)
        expected_bce = (50.0 * m * math.log(2) + (n - m) * math.log(2)) / n
        assert bce == pytest.approx(expected_bce, rel=1e-9)

    def test_seg_empty_mask_convention(self):
        z = np.zeros((3, 3, 3))
        total, bce, dice = seg_loss(z.copy(), z)
        assert dice == pytest.approx(0.0, abs=1e-12)

    def test_seg_shape_mismatch(self):
        with pytest.raises(ContractViolationError):
            seg_loss(np.zeros((2, 2, 2)), np.zeros((2, 2, 3)))

    def test_seg_reduces_to_plain_bce(self):
        # pos_weight 1 and the Dice term ignored must equal standard mean BCE
        rng = np.random.default_rng(1)
        r = rng.uniform(0.05, 0.95, size=(5, 5, 5))
        g = (rng.random((5, 5, 5)) < 0.3).astype(np.float64)
        _, bce, _ = seg_loss(r, g, pos_weight=1.0)
        oracle = -(g * np.log(r) + (1 - g) * np.log(1 - r)).mean()
        assert bce == pytest.approx(oracle, rel=1e-9, abs=1e-9)

    def test_hre_loss_weighting(self):
        assert hre_loss(25.0, 2.0) == pytest.approx(25.02)
        assert hre_loss(0.0, 0.0) == 0.0
        assert hre_loss(3.0, 2.0, lambda_seg=0.0) == 3.0


class TestSegmenter:
    def test_output_shape_and_range(self):
        torch.manual_seed(0)
        model = VoxelSegmenter()
        x = torch.rand(2, 1, *ROI_DIMS)
        out = model(x)
        assert out.shape == (2, *ROI_DIMS)
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_untrained_outputs_differ_across_inputs(self):
        torch.manual_seed(0)
        model = VoxelSegmenter()
        a = model(torch.rand(1, 1, *ROI_DIMS))
        b = model(torch.rand(1, 1, *ROI_DIMS) * 3.0)
        assert not torch.allclose(a, b)

    def test_parameter_budget(self):
        model = VoxelSegmenter()
        assert sum(p.numel() for p in model.parameters()) <= 500_000

    def test_segment_voxels_wraps(self):
        torch.manual_seed(0)
        grid = TINY_GRID
        roi = RoiVolume(np.random.default_rng(0).random(ROI_DIMS).astype(np.float32),
                        (5, 5, 2), grid)
        out = segment_voxels(roi, VoxelSegmenter())
        assert out.probs.shape == ROI_DIMS
        np.testing.assert_array_equal(out.source_intensity, roi.values)
        np.testing.assert_array_equal(out.roi_origin_voxel, [5, 5, 2])


class TestCfar:
    def grid(self):
        return GridSpec(dims=(16, 14, 12), origin=(0, 0, 0),
                        voxel_size=(0.1, 0.1, 0.1))

    def test_uniform_frame_no_detections(self):
        frame = np.ones((16, 14, 12))
        pts, vals = cfar_extract(frame, self.grid(), rate=1.5)
        assert len(pts) == 0

    def test_single_impulse_hand_computed(self):
        frame = np.ones((16, 14, 12))
        frame[8, 7, 6] = 100.0
        guard, train = (1, 1, 1), (2, 2, 2)
        pts, vals = cfar_extract(frame, self.grid(), guard, train, rate=5.0)
        # hand oracle: training shell of the impulse voxel is all ones
        shell_mean = 1.0
        assert 100.0 > 5.0 * shell_mean
        assert len(pts) == 1
        np.testing.assert_allclose(pts[0], self.grid().voxel_center([8, 7, 6]))
        assert vals[0] == 100.0

    def test_detection_count_monotone_in_rate(self):
        rng = np.random.default_rng(3)
        frame = rng.exponential(1.0, size=(16, 14, 12))
        counts = []
        for rate in np.linspace(1.2, 6.0, 10):
            pts, _ = cfar_extract(frame, self.grid(), rate=rate)
            counts.append(len(pts))
        assert all(a >= b for a, b in zip(counts, counts[1:]))

    def test_translation_equivariance(self):
        frame = np.ones((16, 14, 12)) * 0.5
        frame[6, 6, 6] = 40.0
        p1, _ = cfar_extract(frame, self.grid(), rate=4.0)
        shifted = np.ones((16, 14, 12)) * 0.5
        shifted[8, 7, 6] = 40.0
        p2, _ = cfar_extract(shifted, self.grid(), rate=4.0)
        np.testing.assert_allclose(p2 - p1, [[0.2, 0.1, 0.0]])

    def test_edge_uses_partial_shell(self):
        frame = np.ones((16, 14, 12))
        frame[0, 0, 0] = 50.0
        pts, _ = cfar_extract(frame, self.grid(), rate=5.0)
        assert len(pts) == 1
        np.testing.assert_allclose(pts[0], self.grid().voxel_center([0, 0, 0]))


@pytest.fixture(scope="module")
def micro_data():
    prof = profile("micro")
    subjects = make_subjects(2, prof.base_seed)
    return prof, subjects


class TestExtract:
    def test_shared_roi_and_determinism(self, micro_data):
        prof, subjects = micro_data
        seq = build_sequence(prof, subjects[0], "idle", seed=1)
        torch.manual_seed(0)
        segmenter = VoxelSegmenter()
        localizer = OracleLocalizer(seq.gt_center[-1])
        vols = extract(seq.tensors, localizer, segmenter)
        assert len(vols) == 4
        origins = {tuple(v.roi_origin_voxel) for v in vols}
        assert len(origins) == 1
        again = extract(seq.tensors, localizer, segmenter)
        for a, b in zip(vols, again):
            np.testing.assert_array_equal(a.probs, b.probs)

    def test_identical_frames_identical_volumes(self, micro_data):
        prof, subjects = micro_data
        seq = build_sequence(prof, subjects[0], "idle", seed=2)
        frames = np.broadcast_to(seq.tensors.frames[0],
                                 seq.tensors.frames.shape).copy()
        seq.tensors.frames = frames
        torch.manual_seed(0)
        vols = extract(seq.tensors, OracleLocalizer(seq.gt_center[-1]),
                       VoxelSegmenter())
        for v in vols[1:]:
            np.testing.assert_array_equal(v.probs, vols[0].probs)

    def test_static_subject_roi_contains_occupancy(self, micro_data):
        prof, subjects = micro_data
        seq = build_sequence(prof, subjects[1], "idle", seed=3)
        origin = None
        torch.manual_seed(0)
        vols = extract(seq.tensors, OracleLocalizer(seq.gt_center[-1]),
                       VoxelSegmenter())
        origin = vols[0].roi_origin_voxel
        for t in range(4):
            occ_idx = np.argwhere(seq.occupancy[t].values)
            inside = np.all((occ_idx >= origin) & (occ_idx < origin + np.array(ROI_DIMS)),
                            axis=1)
            assert inside.mean() >= 0.99

    @pytest.mark.slow
    def test_walking_subject_roi_contains_first_frame(self):
        # geometry oracle over 100 walk seeds: the frame-T anchored RoI must
        # still cover frame-1 occupancy at walking speed
        prof = profile("micro")
        subjects = make_subjects(2, prof.base_seed)
        from radmesh.scene_sim.grid import roi_origin_for_center
        for seed in range(100):
            seq = build_sequence(prof, subjects[seed % 2], "walk", seed=seed)
            origin = roi_origin_for_center(prof.grid, seq.gt_center[-1], ROI_DIMS)
            occ_idx = np.argwhere(seq.occupancy[0].values)
            inside = np.all((occ_idx >= origin) & (occ_idx < origin + np.array(ROI_DIMS)),
                            axis=1)
            assert inside.mean() >= 0.99, f"seed {seed}: {inside.mean():.3f}"
