import numpy as np
import pytest
import torch

from radmesh.body import (
    FEMALE_SCALE_MAP,
    BodyParams,
    TemplateConfig,
    axis_angle_to_matrix,
    build_template,
    default_template,
    forward,
    lbs_forward,
    select_template,
)
from radmesh.errors import ConfigurationError, ContractViolationError


def quat_rotation_oracle(aa):
    """Independent axis-angle -> matrix path via unit quaternions."""
    aa = np.asarray(aa, dtype=np.float64)
    angle = np.linalg.norm(aa)
    if angle < 1e-12:
        return np.eye(3)
    axis = aa / angle
    w = np.cos(angle / 2.0)
    x, y, z = np.sin(angle / 2.0) * axis
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


class TestAxisAngle:
    def test_zero_rotation_is_identity(self):
        np.testing.assert_array_equal(axis_angle_to_matrix((0.0, 0.0, 0.0)), np.eye(3))

    def test_quarter_turn_about_z_maps_x_to_y(self):
        r = axis_angle_to_matrix((0.0, 0.0, np.pi / 2))
        np.testing.assert_allclose(r @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-12)

    def test_matches_quaternion_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            aa = rng.normal(size=3) * rng.uniform(0.0, np.pi)
            np.testing.assert_allclose(
                axis_angle_to_matrix(aa), quat_rotation_oracle(aa), atol=1e-9)

    def test_orthonormal_det_plus_one(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            r = axis_angle_to_matrix(rng.normal(size=3))
            np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-12)
            assert np.linalg.det(r) == pytest.approx(1.0, abs=1e-12)

    def test_continuous_at_zero(self):
        r = axis_angle_to_matrix((1e-9, -1e-9, 1e-9))
        np.testing.assert_allclose(r, np.eye(3), atol=1e-8)


class TestTemplate:
    def test_default_has_exact_vertex_count_and_valid_tree(self):
        t = default_template("male")
        assert t.rest_vertices.shape == (1024, 3)
        assert t.joint_rest_positions.shape == (22, 3)
        assert t.parent[0] == -1
        assert np.all(t.parent[1:] < np.arange(1, 22))
        t.validate()

    def test_custom_vertex_count(self):
        t = build_template(TemplateConfig(n_vertices=512))
        assert t.rest_vertices.shape == (512, 3)
        t.validate()

    def test_weight_rows_sum_to_one_max_four_nonzero(self):
        t = default_template("male")
        np.testing.assert_allclose(t.skin_weights.sum(axis=1), 1.0, atol=1e-6)
        assert ((t.skin_weights > 0).sum(axis=1) <= 4).all()

    def test_beta0_is_uniform_scale(self):
        t = default_template("male")
        params = BodyParams.zeros()
        params.beta[0] = 1.0
        mesh = forward(t, params)
        # oracle: direct 5% rescale of the rest geometry
        np.testing.assert_allclose(mesh.vertices, 1.05 * t.rest_vertices, atol=1e-9)
        np.testing.assert_allclose(mesh.joints, 1.05 * t.joint_rest_positions, atol=1e-9)

    def test_female_differs_only_by_documented_scale_map(self):
        female = build_template(gender_tag="female")
        cfg = TemplateConfig()
        remapped = build_template(
            TemplateConfig(
                n_vertices=cfg.n_vertices,
                **{k: getattr(cfg, k) * s for k, s in FEMALE_SCALE_MAP.items()},
            ),
            gender_tag="female",
        )
        np.testing.assert_array_equal(female.rest_vertices, remapped.rest_vertices)
        np.testing.assert_array_equal(female.joint_rest_positions,
                                      remapped.joint_rest_positions)

    def test_invalid_config_rejected(self):
        with pytest.raises(ConfigurationError):
            build_template(TemplateConfig(n_vertices=100))
        with pytest.raises(ConfigurationError):
            build_template(TemplateConfig(height=-1.0))


class TestForward:
    def test_identity_pose_reproduces_rest(self):
        t = default_template("male")
        mesh = forward(t, BodyParams.zeros())
        np.testing.assert_allclose(mesh.vertices, t.rest_vertices, atol=1e-12)
        np.testing.assert_allclose(mesh.joints, t.joint_rest_positions, atol=1e-12)

    def test_translation_equivariance(self):
        t = default_template("male")
        params = BodyParams.zeros()
        params.tau[:] = (1.0, 2.0, 3.0)
        mesh = forward(t, params)
        np.testing.assert_allclose(mesh.vertices, t.rest_vertices + [1, 2, 3], atol=1e-12)
        np.testing.assert_allclose(mesh.joints, t.joint_rest_positions + [1, 2, 3], atol=1e-12)

    def test_root_rotation_matches_external_rotation(self):
        t = default_template("male")
        params = BodyParams.zeros()
        params.alpha[:] = (0.0, 0.0, np.pi / 2)
        mesh = forward(t, params)
        r = axis_angle_to_matrix(params.alpha)
        np.testing.assert_allclose(mesh.vertices, t.rest_vertices @ r.T, atol=1e-9)
        np.testing.assert_allclose(mesh.joints, t.joint_rest_positions @ r.T, atol=1e-9)

    def test_rigid_motion_equivariance(self):
        t = default_template("male")
        rng = np.random.default_rng(11)
        base = BodyParams.zeros()
        base.theta = rng.normal(scale=0.2, size=(22, 3))
        plain = forward(t, base)

        moved = base.copy()
        moved.alpha[:] = (0.1, -0.4, 0.7)
        moved.tau[:] = (0.5, -1.0, 0.25)
        r = axis_angle_to_matrix(moved.alpha)
        # composing the root: alpha acts about the root joint, so pivot there
        root = plain.joints[0]
        expected_v = (plain.vertices - root) @ r.T + root + moved.tau
        expected_j = (plain.joints - root) @ r.T + root + moved.tau
        out = forward(t, moved)
        np.testing.assert_allclose(out.vertices, expected_v, atol=1e-6)
        np.testing.assert_allclose(out.joints, expected_j, atol=1e-6)

    def test_posed_joint_follows_parent_chain(self):
        t = default_template("male")
        params = BodyParams.zeros()
        params.theta[16] = (0.0, 1.2, 0.0)  # left shoulder swing
        mesh = forward(t, params)
        # elbow must stay at the rest offset rotated about the shoulder
        r = axis_angle_to_matrix(params.theta[16])
        offset = t.joint_rest_positions[18] - t.joint_rest_positions[16]
        np.testing.assert_allclose(
            mesh.joints[18], t.joint_rest_positions[16] + r @ offset, atol=1e-9)

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ContractViolationError):
            BodyParams(np.zeros(3), np.zeros(9), np.zeros(3), np.zeros((22, 3)))
        with pytest.raises(ContractViolationError):
            BodyParams(np.zeros(3), np.zeros(10), np.zeros(3), np.zeros((21, 3)))

    def test_autodiff_matches_finite_differences(self):
        t = build_template(TemplateConfig(n_vertices=256))
        rng = np.random.default_rng(5)
        alpha = torch.tensor(rng.normal(scale=0.3, size=(1, 3)), requires_grad=True)
        beta = torch.tensor(rng.normal(scale=0.5, size=(1, 10)), requires_grad=True)
        tau = torch.tensor(rng.normal(size=(1, 3)), requires_grad=True)
        theta = torch.tensor(rng.normal(scale=0.3, size=(1, 22, 3)), requires_grad=True)

        probe = torch.tensor(rng.normal(size=(256, 3)))

        def scalar(a, b, tt, th):
            verts, _ = lbs_forward(t, a, b, tt, th)
            return (verts[0] * probe).sum()

        out = scalar(alpha, beta, tau, theta)
        out.backward()
        eps = 1e-6
        tensors = (alpha, beta, tau, theta)
        for idx, tensor in enumerate(tensors):
            flat = tensor.detach().flatten()
            grad = tensor.grad.flatten()
            for i in range(flat.numel()):
                bumped_p = flat.clone()
                bumped_m = flat.clone()
                bumped_p[i] += eps
                bumped_m[i] -= eps
                args_p = [x.detach() for x in tensors]
                args_m = [x.detach() for x in tensors]
                args_p[idx] = bumped_p.reshape(tensor.shape)
                args_m[idx] = bumped_m.reshape(tensor.shape)
                fd = (scalar(*args_p) - scalar(*args_m)).item() / (2 * eps)
                ref = max(abs(fd), abs(grad[i].item()), 1e-8)
                assert abs(fd - grad[i].item()) / ref < 1e-4, (
                    f"param block {idx}, entry {i}: fd={fd}, autodiff={grad[i].item()}")


class TestSelectTemplate:
    def test_high_g_is_male(self):
        assert select_template(1.0).gender_tag == "male"

    def test_low_g_is_female(self):
        assert select_template(0.0).gender_tag == "female"

    def test_tie_breaks_male(self):
        assert select_template(0.5).gender_tag == "male"

    def test_out_of_range_rejected(self):
        with pytest.raises(ContractViolationError):
            select_template(1.5)
