import numpy as np
import pytest
import torch

from radmesh.body import BodyParams, default_template
from radmesh.errors import ContractViolationError, PipelineOrderError
from radmesh.hre.roi import ReflectionVolume
from radmesh.mmr import (
    MeshRegressor,
    MotionShapeAttention,
    ParamTensors,
    PointSet5,
    Teacher,
    difference_volume,
    encode_motion,
    encode_shape,
    fuse,
    mmr_loss,
    model_preset,
    motion_loss,
    regress_params,
    select_topk_points,
    shape_distill_loss,
    smpl_loss,
    teacher_forward,
)
from radmesh.mmr.heads import RegressionHead
from radmesh.mmr.types import MotionToken, ShapeToken
from radmesh.scene_sim import GridSpec

ROI = (32, 32, 24)


def reflection_volume(probs, intensity=None, origin=(5, 5, 2)):
    grid = GridSpec(dims=(61, 55, 31), origin=(-1.525, 0.2, 0.0),
                    voxel_size=(0.05, 0.05, 0.08))
    if intensity is None:
        intensity = np.zeros_like(probs)
    return ReflectionVolume(probs, np.array(origin), intensity, grid)


class TestSelectTopK:
    def test_exactly_k_ones(self):
        rng = np.random.default_rng(0)
        probs = np.zeros(ROI, dtype=np.float32)
        flat = rng.choice(probs.size, size=64, replace=False)
        probs.reshape(-1)[flat] = 1.0
        vol = reflection_volume(probs)
        ps = select_topk_points(vol, k=64)
        assert ps.points.shape == (64, 5)
        np.testing.assert_array_equal(ps.points[:, 4], 1.0)
        expected = set(map(tuple, vol.roi_grid.voxel_center(
            np.stack(np.unravel_index(np.sort(flat), ROI), axis=1)).round(6)))
        got = set(map(tuple, ps.xyz.astype(np.float64).round(6)))
        assert got == expected

    def test_uniform_probs_tie_break_deterministic(self):
        probs = np.full(ROI, 0.5, dtype=np.float32)
        vol = reflection_volume(probs)
        a = select_topk_points(vol, k=32)
        b = select_topk_points(vol, k=32)
        np.testing.assert_array_equal(a.points, b.points)
        # linear-index tie-break: first 32 voxels in C order
        idx3 = np.stack(np.unravel_index(np.arange(32), ROI), axis=1)
        np.testing.assert_allclose(a.xyz, vol.roi_grid.voxel_center(idx3), rtol=1e-6)

    def test_matches_full_sort_oracle(self):
        rng = np.random.default_rng(3)
        probs = rng.random(ROI).astype(np.float32)
        vol = reflection_volume(probs, rng.random(ROI).astype(np.float32))
        ps = select_topk_points(vol, k=100)
        flat = probs.reshape(-1)
        oracle = set(np.argsort(-flat, kind="stable")[:100].tolist())
        got_lin = set(np.ravel_multi_index(
            vol.roi_grid.world_to_voxel(ps.xyz.astype(np.float64)).T, ROI).tolist())
        assert got_lin == oracle

    def test_k_too_large_rejected(self):
        vol = reflection_volume(np.zeros(ROI, dtype=np.float32))
        with pytest.raises(ContractViolationError):
            select_topk_points(vol, k=ROI[0] * ROI[1] * ROI[2] + 1)


class TestEncodeShape:
    def test_permutation_invariance_after_canonicalization(self):
        torch.manual_seed(0)
        cfg = model_preset("desk")
        enc = cfg.build_regressor(seed=1).shape_encoder
        rng = np.random.default_rng(5)
        pts = np.concatenate([
            rng.normal(size=(cfg.k_points, 3)).astype(np.float32),
            rng.random((cfg.k_points, 1)).astype(np.float32),
            rng.random((cfg.k_points, 1)).astype(np.float32),
        ], axis=1)
        ps = PointSet5(pts)
        perm = PointSet5(pts[rng.permutation(len(pts))])
        t1 = encode_shape(ps, enc)
        t2 = encode_shape(perm, enc)
        np.testing.assert_array_equal(t1.vector, t2.vector)

    def test_token_width(self):
        cfg = model_preset("desk")
        enc = cfg.build_regressor(seed=2).shape_encoder
        rng = np.random.default_rng(1)
        pts = np.concatenate([rng.normal(size=(64, 3)), rng.random((64, 2))],
                             axis=1).astype(np.float32)
        token = encode_shape(PointSet5(pts), enc)
        assert token.vector.shape == (cfg.d_token,)


class TestDifferenceVolume:
    def volumes(self, frames):
        return [reflection_volume(f) for f in frames]

    def test_identical_frames_zero(self):
        f = np.random.default_rng(0).random(ROI).astype(np.float32) * 0.5
        d = difference_volume(self.volumes([f, f, f, f]))
        assert d.shape == (3, *ROI)
        np.testing.assert_array_equal(d, 0)

    def test_constant_offset(self):
        rng = np.random.default_rng(1)
        base = rng.random(ROI).astype(np.float32) * 0.4
        last = np.clip(base + 0.25, 0, 1).astype(np.float32)
        d = difference_volume(self.volumes([base, base, base, last]))
        np.testing.assert_allclose(d[0], last - base, atol=1e-7)

    def test_matches_elementwise_oracle(self):
        rng = np.random.default_rng(2)
        frames = [rng.random(ROI).astype(np.float32) for _ in range(4)]
        d = difference_volume(self.volumes(frames))
        for i in range(3):
            np.testing.assert_array_equal(d[i], frames[3] - frames[i])

    def test_misaligned_rois_raise(self):
        rng = np.random.default_rng(3)
        a = reflection_volume(rng.random(ROI).astype(np.float32), origin=(5, 5, 2))
        b = reflection_volume(rng.random(ROI).astype(np.float32), origin=(6, 5, 2))
        with pytest.raises(ContractViolationError):
            difference_volume([a, a, a, b])


class TestEncodeMotion:
    def test_eval_mode_no_flow(self):
        cfg = model_preset("desk")
        net = cfg.build_regressor(seed=3).motion_net
        token, flow = encode_motion(np.zeros((3, *ROI), dtype=np.float32), net, "eval")
        assert flow is None
        assert token.vector.shape == (cfg.d_token,)

    def test_train_mode_flow_shape(self):
        cfg = model_preset("desk")
        net = cfg.build_regressor(seed=3).motion_net
        token, flow = encode_motion(np.zeros((3, *ROI), dtype=np.float32), net, "train")
        assert flow.shape == (3, *ROI)

    def test_equal_inputs_equal_tokens(self):
        cfg = model_preset("desk")
        net = cfg.build_regressor(seed=4).motion_net
        z = np.zeros((3, *ROI), dtype=np.float32)
        t1, _ = encode_motion(z, net, "eval")
        t2, _ = encode_motion(z.copy(), net, "eval")
        np.testing.assert_array_equal(t1.vector, t2.vector)


class TestFuse:
    def test_attention_rows_are_convex(self):
        torch.manual_seed(0)
        attn = MotionShapeAttention(d_model=32, n_frames=4, d_ff=64)
        tokens = torch.randn(2, 5, 32)
        for maps in attn.attention_maps(tokens):
            sums = maps.sum(dim=-1)
            np.testing.assert_allclose(sums.detach().numpy(), 1.0, atol=1e-6)

    def test_sequence_length_and_single_output(self):
        torch.manual_seed(0)
        attn = MotionShapeAttention(d_model=32, n_frames=4, d_ff=64)
        fused = attn(torch.randn(3, 5, 32))
        assert fused.shape == (3, 32)

    def test_permutation_equivariance_with_pos_embed(self):
        torch.manual_seed(1)
        attn = MotionShapeAttention(d_model=32, n_frames=4, d_ff=64)
        attn.eval()
        tokens = torch.randn(1, 5, 32)
        perm = torch.tensor([0, 3, 1, 4, 2])  # keep the motion slot fixed
        with torch.no_grad():
            base = attn(tokens)
            permuted = attn(tokens[:, perm], pos_embed=attn.pos_embed[perm])
        np.testing.assert_allclose(base.numpy(), permuted.numpy(), atol=1e-5)

    def test_fuse_wrapper_width_check(self):
        torch.manual_seed(0)
        attn = MotionShapeAttention(d_model=32, n_frames=4, d_ff=64)
        z = MotionToken(np.zeros(32, dtype=np.float32))
        toks = [ShapeToken(np.zeros(32, dtype=np.float32)) for _ in range(4)]
        out = fuse(z, toks, attn)
        assert out.shape == (32,)
        bad = [ShapeToken(np.zeros(16, dtype=np.float32))] + toks[:3]
        with pytest.raises(ContractViolationError):
            fuse(z, bad, attn)


class TestRegressParams:
    def test_output_arity_and_g_range(self):
        torch.manual_seed(0)
        head = RegressionHead(d_in=32, hidden=64)
        raw = head(torch.randn(1000, 32))
        assert raw.alpha.shape == (1000, 3)
        assert raw.beta.shape == (1000, 10)
        assert raw.tau.shape == (1000, 3)
        assert raw.theta.shape == (1000, 22, 3)
        assert raw.g.min() >= 0.0 and raw.g.max() <= 1.0
        n_out = 3 + 10 + 3 + 66
        assert n_out == 82  # plus the separate gender probability

    def test_frozen_head_deterministic(self):
        torch.manual_seed(1)
        head = RegressionHead(d_in=16, hidden=32)
        fused = np.random.default_rng(0).normal(size=16).astype(np.float32)
        a = regress_params(fused, head)
        b = regress_params(fused, head)
        np.testing.assert_array_equal(a.theta, b.theta)
        assert a.g == b.g


class TestTeacher:
    def test_untrained_teacher_raises(self):
        teacher = model_preset("desk").build_teacher(seed=0)
        pts = np.random.default_rng(0).normal(size=(128, 3))
        with pytest.raises(PipelineOrderError):
            teacher_forward(pts, teacher)

    def test_token_width_matches_student(self):
        cfg = model_preset("desk")
        teacher = cfg.build_teacher(seed=0)
        teacher.trained = True
        student = cfg.build_regressor(seed=1)
        token, params = teacher_forward(
            np.random.default_rng(0).normal(size=(128, 3)), teacher)
        assert token.vector.shape == (cfg.d_token,)
        assert student.shape_encoder.d_token == cfg.d_token

    def test_frozen_teacher_deterministic(self):
        teacher = model_preset("desk").build_teacher(seed=0)
        teacher.trained = True
        pts = np.random.default_rng(1).normal(size=(128, 3))
        t1, p1 = teacher_forward(pts, teacher)
        t2, p2 = teacher_forward(pts, teacher)
        np.testing.assert_array_equal(t1.vector, t2.vector)
        np.testing.assert_array_equal(p1.theta, p2.theta)


class TestStage2Losses:
    def test_distill_identical_zero(self):
        s = torch.randn(4, 16, dtype=torch.float64)
        assert shape_distill_loss(s, s.clone()).item() == 0.0

    def test_distill_hand_arithmetic(self):
        s = torch.zeros(2, 4, dtype=torch.float64)
        t = torch.zeros(2, 4, dtype=torch.float64)
        t[0, 0] = 1.0  # gap norm 1
        t[1, :] = torch.tensor([1.5, 1.5, 1.5, 1.5]) / 1.5 * 1.5  # norm 3
        assert torch.linalg.norm(t[1]).item() == pytest.approx(3.0)
        assert shape_distill_loss(s, t).item() == pytest.approx((1.0 + 9.0) / 2.0)

    def test_teacher_receives_no_gradient(self):
        s = torch.randn(3, 8, requires_grad=True)
        t = torch.randn(3, 8, requires_grad=True)
        loss = shape_distill_loss(s, t)
        loss.backward()
        assert s.grad is not None and s.grad.abs().sum() > 0
        assert t.grad is None

    def test_motion_loss_values(self):
        g = torch.randn(3, 8, 8, 6, dtype=torch.float64)
        assert motion_loss(g, g).item() == 0.0
        assert motion_loss(g + 0.1, g).item() == pytest.approx(0.01)
        f = torch.randn(3, 8, 8, 6, dtype=torch.float64)
        zero = torch.zeros_like(f)
        assert motion_loss(f, zero).item() == pytest.approx((f ** 2).mean().item())

    def test_motion_loss_shape_mismatch(self):
        with pytest.raises(ContractViolationError):
            motion_loss(torch.zeros(3, 4, 4, 4), torch.zeros(3, 4, 4, 5))

    def test_motion_loss_masked(self):
        f = torch.ones(3, 2, 2, 2, dtype=torch.float64)
        g = torch.zeros_like(f)
        mask = torch.zeros_like(f)
        mask[:, 0] = 1.0
        assert motion_loss(f, g, mask=mask).item() == pytest.approx(1.0)

    def test_smpl_loss_zero_at_truth(self):
        template = default_template("male")
        gt = ParamTensors.from_params([BodyParams.zeros(g=1.0)], dtype=torch.float64)
        total, parts = smpl_loss(gt, gt, template)
        assert total.item() <= 1e-6

    def test_smpl_loss_translation_hand_arithmetic(self):
        template = default_template("male")
        gt = ParamTensors.from_params([BodyParams.zeros(g=1.0)], dtype=torch.float64)
        moved = BodyParams.zeros(g=1.0)
        moved.tau[:] = (3.0, 4.0, 0.0)
        pred = ParamTensors.from_params([moved], dtype=torch.float64)
        total, parts = smpl_loss(pred, gt, template)
        assert parts["tau"].item() == pytest.approx(25.0 / 3.0)
        assert parts["joint"].item() == pytest.approx(25.0)
        assert total.item() == pytest.approx(25.0 / 3.0 + 25.0, abs=1e-5)

    def test_smpl_loss_gradient_vs_finite_differences(self):
        from radmesh.body import TemplateConfig, build_template
        template = build_template(TemplateConfig(n_vertices=256))
        rng = np.random.default_rng(7)
        gt_np = BodyParams(rng.normal(scale=0.2, size=3),
                           rng.normal(scale=0.5, size=10),
                           rng.normal(size=3),
                           rng.normal(scale=0.2, size=(22, 3)), g=1.0)
        gt = ParamTensors.from_params([gt_np], dtype=torch.float64)
        vec = torch.tensor(rng.normal(scale=0.1, size=83), dtype=torch.float64,
                           requires_grad=True)

        def loss_of(v):
            pred = ParamTensors(v[0:3][None], v[3:13][None], v[13:16][None],
                                v[16:82].reshape(1, 22, 3),
                                torch.sigmoid(v[82])[None])
            total, _ = smpl_loss(pred, gt, template)
            return total

        loss = loss_of(vec)
        loss.backward()
        eps = 1e-6
        for i in range(0, 83, 9):  # probe a spread of parameters
            vp = vec.detach().clone()
            vm = vec.detach().clone()
            vp[i] += eps
            vm[i] -= eps
            fd = (loss_of(vp) - loss_of(vm)).item() / (2 * eps)
            ad = vec.grad[i].item()
            ref = max(abs(fd), abs(ad), 1e-8)
            assert abs(fd - ad) / ref < 1e-4, f"param {i}: fd={fd} ad={ad}"

    def test_mmr_loss_weighting(self):
        assert mmr_loss(torch.tensor(1.0), torch.tensor(0.1),
                        torch.tensor(0.001)).item() == pytest.approx(2.5)
        assert mmr_loss(torch.tensor(0.0), torch.tensor(0.0),
                        torch.tensor(0.0)).item() == 0.0
        assert mmr_loss(torch.tensor(2.0), None, None).item() == 2.0


class TestAblationGradients:
    def test_motion_off_gives_zero_motion_gradients(self):
        torch.manual_seed(0)
        cfg = model_preset("desk")
        model = cfg.build_regressor(seed=5)
        b, t, k = 2, 4, 64
        pts = torch.randn(b, t, k, 5)
        params, tokens, flow = model(pts, None, use_motion=False)
        assert flow is None
        gt = ParamTensors(torch.zeros(b, 3), torch.zeros(b, 10), torch.zeros(b, 3),
                          torch.zeros(b, 22, 3), torch.ones(b))
        total, _ = smpl_loss(params, gt, default_template("male"))
        total.backward()
        for p in model.motion_net.parameters():
            assert p.grad is None or p.grad.abs().sum() == 0
        assert model.query_token.grad is not None
