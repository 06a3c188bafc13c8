"""Procedural parametric human body with an SMPL-X style parameter interface.

The body is driven by (alpha, beta, tau, theta, g): axis-angle root
orientation, 10 shape coefficients, global translation, 22 per-joint
axis-angle rotations, and a gender probability used to pick the male or
female template. Geometry is a low-poly capsule-limb phantom posed by
linear blend skinning over a 22-joint kinematic tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import torch

from .errors import ConfigurationError, ContractViolationError

NUM_JOINTS = 22
NUM_BETAS = 10

JOINT_NAMES = [
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
]

# parent[j] < j for every non-root joint; root carries the -1 sentinel.
PARENTS = np.array(
    [-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19],
    dtype=np.int64,
)


@dataclass
class BodyParams:
    """Regression target bundle: root orientation, shape, translation, pose, gender.

    alpha: (3,) axis-angle root orientation, radians * axis.
    beta:  (10,) shape coefficients.
    tau:   (3,) global translation in meters.
    theta: (22, 3) per-joint axis-angle pose.
    g:     gender probability in [0, 1] (1 = male).
    """

    alpha: np.ndarray
    beta: np.ndarray
    tau: np.ndarray
    theta: np.ndarray
    g: float = 1.0

    def __post_init__(self):
        self.alpha = np.asarray(self.alpha, dtype=np.float64).reshape(3)
        self.beta = np.asarray(self.beta, dtype=np.float64).reshape(-1)
        self.tau = np.asarray(self.tau, dtype=np.float64).reshape(3)
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.beta.shape != (NUM_BETAS,):
            raise ContractViolationError(
                f"beta must have {NUM_BETAS} entries, got {self.beta.shape}")
        if self.theta.shape != (NUM_JOINTS, 3):
            raise ContractViolationError(
                f"theta must be ({NUM_JOINTS}, 3), got {self.theta.shape}")
        if not (0.0 <= self.g <= 1.0):
            raise ContractViolationError(f"g must lie in [0, 1], got {self.g}")
        for name in ("alpha", "beta", "tau", "theta"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ContractViolationError(f"{name} contains non-finite values")

    @classmethod
    def zeros(cls, g: float = 1.0) -> "BodyParams":
        return cls(np.zeros(3), np.zeros(NUM_BETAS), np.zeros(3),
                   np.zeros((NUM_JOINTS, 3)), g)

    def copy(self) -> "BodyParams":
        return BodyParams(self.alpha.copy(), self.beta.copy(),
                          self.tau.copy(), self.theta.copy(), self.g)


@dataclass
class Mesh:
    """Posed body surface: world-frame vertices, 22 world-frame joints, faces."""

    vertices: np.ndarray  # (N_v, 3) meters
    joints: np.ndarray    # (22, 3) meters
    faces: np.ndarray | None = None  # (N_f, 3) vertex indices

    def translated(self, offset) -> "Mesh":
        offset = np.asarray(offset, dtype=np.float64).reshape(3)
        return Mesh(self.vertices + offset, self.joints + offset, self.faces)


@dataclass
class TemplateConfig:
    """Proportion knobs for the procedural template.

    The female template is the male one rebuilt with the documented scale
    map: height 0.93, girth 0.90, shoulder 0.92, hip 1.06.
    """

    n_vertices: int = 1024
    height: float = 1.0    # scales all joint/vertex z
    girth: float = 1.0     # scales capsule radii
    shoulder: float = 1.0  # scales lateral x of the arm chain
    hip: float = 1.0       # scales lateral x of the hip joints

    def validate(self):
        if self.n_vertices < 200:
            raise ConfigurationError("n_vertices must be >= 200")
        for name in ("height", "girth", "shoulder", "hip"):
            if getattr(self, name) <= 0:
                raise ConfigurationError(f"{name} scale must be positive")


FEMALE_SCALE_MAP = dict(height=0.93, girth=0.90, shoulder=0.92, hip=1.06)


@dataclass
class TemplateBody:
    """Rest-pose body template: geometry, skeleton, skinning and shape basis."""

    rest_vertices: np.ndarray        # (N_v, 3) meters, T-pose, pelvis at origin
    joint_rest_positions: np.ndarray  # (22, 3) meters
    parent: np.ndarray               # (22,) parent indices, root = -1
    skin_weights: np.ndarray         # (N_v, 22), rows sum to 1, <= 4 nonzero
    shape_basis: np.ndarray          # (N_v, 3, 10) meters per unit beta
    joint_shape_basis: np.ndarray    # (22, 3, 10) joint response to beta
    faces: np.ndarray                # (N_f, 3) int vertex indices
    gender_tag: str = "male"
    config: TemplateConfig = field(default_factory=TemplateConfig)
    _torch_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self) -> int:
        return self.rest_vertices.shape[0]

    def validate(self):
        n = self.n_vertices
        if self.joint_rest_positions.shape != (NUM_JOINTS, 3):
            raise ContractViolationError("joint_rest_positions must be (22, 3)")
        if self.skin_weights.shape != (n, NUM_JOINTS):
            raise ContractViolationError("skin_weights shape mismatch")
        if not np.allclose(self.skin_weights.sum(axis=1), 1.0, atol=1e-6):
            raise ContractViolationError("skin weight rows must sum to 1")
        if (self.skin_weights < 0).any():
            raise ContractViolationError("skin weights must be nonnegative")
        if ((self.skin_weights > 0).sum(axis=1) > 4).any():
            raise ContractViolationError("at most 4 nonzero weights per vertex")
        if self.parent[0] != -1 or not np.all(self.parent[1:] < np.arange(1, NUM_JOINTS)):
            raise ContractViolationError("parent array must be a tree with parent < child")
        if self.shape_basis.shape != (n, 3, NUM_BETAS):
            raise ContractViolationError("shape_basis shape mismatch")

    def tensors(self, dtype=torch.float64, device="cpu") -> dict:
        """Template arrays as torch tensors, cached per (dtype, device)."""
        key = (dtype, str(device))
        if key not in self._torch_cache:
            self._torch_cache[key] = {
                "rest_vertices": torch.as_tensor(self.rest_vertices, dtype=dtype, device=device),
                "joints": torch.as_tensor(self.joint_rest_positions, dtype=dtype, device=device),
                "skin_weights": torch.as_tensor(self.skin_weights, dtype=dtype, device=device),
                "shape_basis": torch.as_tensor(self.shape_basis, dtype=dtype, device=device),
                "joint_shape_basis": torch.as_tensor(self.joint_shape_basis, dtype=dtype, device=device),
            }
        return self._torch_cache[key]


# ---------------------------------------------------------------------------
# rotations

def rotation_matrices(aa: torch.Tensor) -> torch.Tensor:
    """Axis-angle (..., 3) -> rotation matrices (..., 3, 3), Rodrigues form.

    Smooth through the zero rotation (Taylor branch for small angles), so the
    map is autodiff-safe everywhere and returns the exact identity at 0.
    """
    angle = torch.linalg.norm(aa, dim=-1)
    big = angle > 1e-6
    safe = torch.where(big, angle, torch.ones_like(angle))
    angle_sq = angle * angle
    k1 = torch.where(big, torch.sin(safe) / safe, 1.0 - angle_sq / 6.0)
    k2 = torch.where(big, (1.0 - torch.cos(safe)) / (safe * safe),
                     0.5 - angle_sq / 24.0)

    x, y, z = aa[..., 0], aa[..., 1], aa[..., 2]
    zero = torch.zeros_like(x)
    k_rows = torch.stack([
        torch.stack([zero, -z, y], dim=-1),
        torch.stack([z, zero, -x], dim=-1),
        torch.stack([-y, x, zero], dim=-1),
    ], dim=-2)
    eye = torch.eye(3, dtype=aa.dtype, device=aa.device).expand(k_rows.shape)
    return eye + k1[..., None, None] * k_rows + k2[..., None, None] * (k_rows @ k_rows)


def axis_angle_to_matrix(aa) -> np.ndarray:
    """Axis-angle 3-vector -> 3x3 rotation matrix (numpy convenience wrapper)."""
    t = torch.as_tensor(np.asarray(aa, dtype=np.float64).reshape(3))
    return rotation_matrices(t).numpy()


# ---------------------------------------------------------------------------
# forward pass

def lbs_forward(template: TemplateBody, alpha: torch.Tensor, beta: torch.Tensor,
                tau: torch.Tensor, theta: torch.Tensor):
    """Batched shape-blend + forward kinematics + linear blend skinning.

    alpha (B,3), beta (B,10), tau (B,3), theta (B,22,3) ->
    vertices (B,N,3), joints (B,22,3). Differentiable w.r.t. all inputs.
    """
    if theta.shape[-2:] != (NUM_JOINTS, 3):
        raise ContractViolationError(f"theta must end in ({NUM_JOINTS}, 3)")
    if beta.shape[-1] != NUM_BETAS:
        raise ContractViolationError(f"beta must have {NUM_BETAS} entries")
    tt = template.tensors(dtype=alpha.dtype, device=alpha.device)
    b = alpha.shape[0]

    v_shaped = tt["rest_vertices"] + torch.einsum("vck,bk->bvc", tt["shape_basis"], beta)
    j_shaped = tt["joints"] + torch.einsum("jck,bk->bjc", tt["joint_shape_basis"], beta)

    rot_local = rotation_matrices(theta)                 # (B,22,3,3)
    root_rot = rotation_matrices(alpha) @ rot_local[:, 0]

    rot_world = [root_rot]
    pos_world = [j_shaped[:, 0]]
    for j in range(1, NUM_JOINTS):
        p = int(PARENTS[j])
        offset = j_shaped[:, j] - j_shaped[:, p]
        rot_world.append(rot_world[p] @ rot_local[:, j])
        pos_world.append(pos_world[p] + torch.einsum("bxy,by->bx", rot_world[p], offset))
    rot_world = torch.stack(rot_world, dim=1)            # (B,22,3,3)
    pos_world = torch.stack(pos_world, dim=1)            # (B,22,3)

    # skinning transform: A_j x = R_j x + (t_j - R_j j_j)
    a_trans = pos_world - torch.einsum("bjxy,bjy->bjx", rot_world, j_shaped)
    w = tt["skin_weights"]                               # (N,22)
    blended_rot = torch.einsum("vj,bjxy->bvxy", w, rot_world)
    blended_t = torch.einsum("vj,bjx->bvx", w, a_trans)
    verts = torch.einsum("bvxy,bvy->bvx", blended_rot, v_shaped) + blended_t

    verts = verts + tau[:, None, :]
    joints = pos_world + tau[:, None, :]
    return verts, joints


def forward(template: TemplateBody, params: BodyParams) -> Mesh:
    """Pose the template with the given parameters (float64, no gradients)."""
    with torch.no_grad():
        verts, joints = lbs_forward(
            template,
            torch.as_tensor(params.alpha, dtype=torch.float64)[None],
            torch.as_tensor(params.beta, dtype=torch.float64)[None],
            torch.as_tensor(params.tau, dtype=torch.float64)[None],
            torch.as_tensor(params.theta, dtype=torch.float64)[None],
        )
    return Mesh(verts[0].numpy(), joints[0].numpy(), template.faces)


# ---------------------------------------------------------------------------
# template construction

def _rest_joints(cfg: TemplateConfig) -> np.ndarray:
    """T-pose joint positions, pelvis at origin; x lateral, y depth, z up."""
    j = np.zeros((NUM_JOINTS, 3))
    j[1] = (0.09, 0.0, -0.06)    # left hip
    j[2] = (-0.09, 0.0, -0.06)   # right hip
    j[3] = (0.0, 0.0, 0.12)      # spine1
    j[4] = (0.10, 0.0, -0.48)    # left knee
    j[5] = (-0.10, 0.0, -0.48)   # right knee
    j[6] = (0.0, 0.0, 0.26)      # spine2
    j[7] = (0.10, 0.0, -0.88)    # left ankle
    j[8] = (-0.10, 0.0, -0.88)   # right ankle
    j[9] = (0.0, 0.0, 0.40)      # spine3
    j[10] = (0.11, -0.12, -0.94)  # left foot (toes toward -y)
    j[11] = (-0.11, -0.12, -0.94)
    j[12] = (0.0, 0.0, 0.55)     # neck
    j[13] = (0.06, 0.0, 0.50)    # left collar
    j[14] = (-0.06, 0.0, 0.50)
    j[15] = (0.0, 0.0, 0.65)     # head
    j[16] = (0.18, 0.0, 0.52)    # left shoulder
    j[17] = (-0.18, 0.0, 0.52)
    j[18] = (0.45, 0.0, 0.52)    # left elbow
    j[19] = (-0.45, 0.0, 0.52)
    j[20] = (0.70, 0.0, 0.52)    # left wrist
    j[21] = (-0.70, 0.0, 0.52)

    j[:, 2] *= cfg.height
    arm_chain = [13, 14, 16, 17, 18, 19, 20, 21]
    j[arm_chain, 0] *= cfg.shoulder
    j[[1, 2], 0] *= cfg.hip
    return j


# (bind_proximal, bind_distal, endpoint_a_joint, endpoint_b_joint, radius, category)
_CAPSULE_SPECS = [
    (0, 1, 0, 1, 0.090, "pelvis"),
    (0, 2, 0, 2, 0.090, "pelvis"),
    (0, 3, 0, 3, 0.125, "torso"),
    (3, 6, 3, 6, 0.120, "torso"),
    (6, 9, 6, 9, 0.115, "torso"),
    (9, 12, 9, 12, 0.055, "torso"),
    (9, 13, 9, 13, 0.050, "collar"),
    (9, 14, 9, 14, 0.050, "collar"),
    (12, 15, 12, 15, 0.050, "neck"),
    (13, 16, 13, 16, 0.050, "collar"),
    (14, 17, 14, 17, 0.050, "collar"),
    (16, 18, 16, 18, 0.045, "arm"),
    (17, 19, 17, 19, 0.045, "arm"),
    (18, 20, 18, 20, 0.038, "arm"),
    (19, 21, 19, 21, 0.038, "arm"),
    (1, 4, 1, 4, 0.075, "leg"),
    (2, 5, 2, 5, 0.075, "leg"),
    (4, 7, 4, 7, 0.055, "leg"),
    (5, 8, 5, 8, 0.055, "leg"),
    (7, 10, 7, 10, 0.035, "foot"),
    (8, 11, 8, 11, 0.035, "foot"),
]

_HEAD_EXTENT = 0.13
_HEAD_RADIUS = 0.085


def _orthonormal_frame(axis: np.ndarray):
    helper = np.array([0.0, 0.0, 1.0]) if abs(axis[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    u = np.cross(axis, helper)
    u /= np.linalg.norm(u)
    v = np.cross(axis, u)
    return u, v


def _capsule_mesh(p0, p1, radius, n_rings, n_seg):
    """Rings along the axis plus one apex per end; returns (verts, faces, t)."""
    axis = p1 - p0
    length = np.linalg.norm(axis)
    axis = axis / length
    u, v = _orthonormal_frame(axis)
    ang = 2.0 * math.pi * np.arange(n_seg) / n_seg
    circle = np.outer(np.cos(ang), u) + np.outer(np.sin(ang), v)

    verts, tvals = [], []
    for r in range(n_rings):
        t = r / (n_rings - 1)
        center = p0 + t * length * axis
        verts.append(center + radius * circle)
        tvals.extend([t] * n_seg)
    verts = np.concatenate(verts, axis=0)
    apex_a = p0 - radius * axis
    apex_b = p1 + radius * axis
    verts = np.concatenate([verts, apex_a[None], apex_b[None]], axis=0)
    tvals.extend([0.0, 1.0])

    faces = []
    for r in range(n_rings - 1):
        for s in range(n_seg):
            a = r * n_seg + s
            b = r * n_seg + (s + 1) % n_seg
            c = (r + 1) * n_seg + s
            d = (r + 1) * n_seg + (s + 1) % n_seg
            faces.append((a, b, c))
            faces.append((b, d, c))
    ia, ib = len(verts) - 2, len(verts) - 1
    last = (n_rings - 1) * n_seg
    for s in range(n_seg):
        faces.append((ia, (s + 1) % n_seg, s))
        faces.append((ib, last + s, last + (s + 1) % n_seg))
    return verts, np.array(faces, dtype=np.int64), np.array(tvals)


def _triangle_areas(verts, faces):
    a = verts[faces[:, 1]] - verts[faces[:, 0]]
    b = verts[faces[:, 2]] - verts[faces[:, 0]]
    return 0.5 * np.linalg.norm(np.cross(a, b), axis=1)


def build_template(config: TemplateConfig | None = None,
                   gender_tag: str = "male") -> TemplateBody:
    """Construct the capsule-limb template with exactly config.n_vertices vertices.

    Structured capsule meshes are generated slightly under budget, then the
    largest faces are centroid-split (deterministically) to hit the exact
    vertex count.
    """
    if gender_tag not in ("male", "female"):
        raise ConfigurationError(f"unknown gender_tag {gender_tag!r}")
    cfg = config if config is not None else TemplateConfig()
    if gender_tag == "female" and config is None:
        cfg = replace(cfg, **{k: getattr(cfg, k) * s for k, s in FEMALE_SCALE_MAP.items()})
    cfg.validate()

    joints = _rest_joints(cfg)
    specs = [(a, b, joints[pa], joints[pb], r * cfg.girth, cat)
             for a, b, pa, pb, r, cat in _CAPSULE_SPECS]
    head_top = joints[15] + np.array([0.0, 0.0, _HEAD_EXTENT * cfg.height])
    specs.append((15, 15, joints[15], head_top, _HEAD_RADIUS * cfg.girth, "head"))

    lengths = np.array([np.linalg.norm(p1 - p0) for _, _, p0, p1, _, _ in specs])
    # leave ~4% headroom for the exact-count splitting pass; shrink the ring
    # segment count for small budgets (minimum layout is 2 rings per capsule)
    budget = int(cfg.n_vertices * 0.96)
    n_seg = max(3, min(8, (budget // len(specs) - 2) // 2))
    total_rings = max(len(specs) * 2, (budget - 2 * len(specs)) // n_seg)
    ring_alloc = np.maximum(2, np.floor(total_rings * lengths / lengths.sum()).astype(int))
    while ring_alloc.sum() > total_rings:
        ring_alloc[np.argmax(ring_alloc)] -= 1

    all_verts, all_faces, rows = [], [], []
    offset = 0
    for (ja, jb, p0, p1, radius, cat), n_rings in zip(specs, ring_alloc):
        if np.linalg.norm(p1 - p0) <= 0:
            raise ConfigurationError("capsule with nonpositive length")
        verts, faces, tvals = _capsule_mesh(p0, p1, radius, int(n_rings), n_seg)
        axis = (p1 - p0) / np.linalg.norm(p1 - p0)
        axial = (verts - p0) @ axis
        radial = verts - p0 - np.outer(axial, axis)
        rnorm = np.linalg.norm(radial, axis=1, keepdims=True)
        radial = np.divide(radial, rnorm, out=np.zeros_like(radial), where=rnorm > 1e-12)
        for k in range(len(verts)):
            rows.append((ja, jb, tvals[k], cat, radial[k]))
        all_verts.append(verts)
        all_faces.append(faces + offset)
        offset += len(verts)

    verts = np.concatenate(all_verts, axis=0)
    faces = np.concatenate(all_faces, axis=0)
    if len(verts) > cfg.n_vertices:
        raise ConfigurationError(
            f"capsule discretization overshot the vertex budget ({len(verts)} > {cfg.n_vertices})")

    bind_a = np.array([r[0] for r in rows])
    bind_b = np.array([r[1] for r in rows])
    tpar = np.array([r[2] for r in rows])
    cats = [r[3] for r in rows]
    radials = np.array([r[4] for r in rows])

    # split largest faces until the budget is met exactly
    while len(verts) < cfg.n_vertices:
        areas = _triangle_areas(verts, faces)
        fi = int(np.argmax(areas))
        tri = faces[fi]
        centroid = verts[tri].mean(axis=0)
        verts = np.concatenate([verts, centroid[None]], axis=0)
        ni = len(verts) - 1
        bind_a = np.append(bind_a, bind_a[tri[0]])
        bind_b = np.append(bind_b, bind_b[tri[0]])
        tpar = np.append(tpar, tpar[tri].mean())
        cats.append(cats[tri[0]])
        radials = np.concatenate([radials, radials[tri].mean(axis=0, keepdims=True)], axis=0)
        new = np.array([[tri[0], tri[1], ni], [tri[1], tri[2], ni], [tri[2], tri[0], ni]])
        faces = np.concatenate([np.delete(faces, fi, axis=0), new], axis=0)

    # distal-ramp skinning: proximal joint owns the capsule, blending to 50/50
    # at the distal end
    wd = 0.5 * np.clip((tpar - 0.55) / 0.45, 0.0, 1.0)
    weights = np.zeros((len(verts), NUM_JOINTS))
    same = bind_a == bind_b
    weights[np.arange(len(verts)), bind_a] = np.where(same, 1.0, 1.0 - wd)
    np.add.at(weights, (np.arange(len(verts)), bind_b), np.where(same, 0.0, wd))
    weights /= weights.sum(axis=1, keepdims=True)

    shape_basis, joint_basis = _build_shape_basis(verts, joints, cats, radials)

    template = TemplateBody(
        rest_vertices=verts,
        joint_rest_positions=joints,
        parent=PARENTS.copy(),
        skin_weights=weights,
        shape_basis=shape_basis,
        joint_shape_basis=joint_basis,
        faces=faces.astype(np.int64),
        gender_tag=gender_tag,
        config=cfg,
    )
    template.validate()
    return template


def _build_shape_basis(verts, joints, cats, radials):
    """10 blend-shape channels: scale, heights, girths, limb lengths, widths."""
    n = len(verts)
    cats = np.array(cats)
    vb = np.zeros((n, 3, NUM_BETAS))
    jb = np.zeros((NUM_JOINTS, 3, NUM_BETAS))
    x, z = verts[:, 0], verts[:, 2]
    torso = np.isin(cats, ["torso", "pelvis"])
    arms = np.isin(cats, ["arm", "collar"])
    legs = np.isin(cats, ["leg", "foot"])
    head = cats == "head"

    # 0: overall scale, +5% per unit beta
    vb[:, :, 0] = 0.05 * verts
    jb[:, :, 0] = 0.05 * joints
    # 1: height-only scale
    vb[:, 2, 1] = 0.04 * z
    jb[:, 2, 1] = 0.04 * joints[:, 2]
    # 2: torso girth (radial push off the spine axis)
    radial_xy = verts * [1.0, 1.0, 0.0]
    rn = np.linalg.norm(radial_xy, axis=1, keepdims=True)
    radial_xy = np.divide(radial_xy, rn, out=np.zeros_like(radial_xy), where=rn > 1e-9)
    vb[torso, :, 2] = 0.02 * radial_xy[torso]
    # 3: arm length (stretch beyond the collars)
    collar_x = abs(joints[13, 0])
    reach = np.maximum(np.abs(x) - collar_x, 0.0) * np.sign(x)
    vb[arms, 0, 3] = 0.05 * reach[arms]
    arm_joints = [16, 17, 18, 19, 20, 21]
    jx = joints[arm_joints, 0]
    jb[arm_joints, 0, 3] = 0.05 * (np.abs(jx) - collar_x) * np.sign(jx)
    # 4: leg length (stretch below the hips)
    hip_z = joints[1, 2]
    drop = np.minimum(z - hip_z, 0.0)
    vb[legs, 2, 4] = 0.05 * drop[legs]
    leg_joints = [4, 5, 7, 8, 10, 11]
    jb[leg_joints, 2, 4] = 0.05 * (joints[leg_joints, 2] - hip_z)
    # 5: head size
    to_head = verts - joints[15]
    hn = np.linalg.norm(to_head, axis=1, keepdims=True)
    to_head = np.divide(to_head, hn, out=np.zeros_like(to_head), where=hn > 1e-9)
    vb[head, :, 5] = 0.025 * to_head[head]
    # 6: shoulder width
    vb[arms, 0, 6] = 0.02 * np.sign(x[arms])
    jb[arm_joints + [13, 14], 0, 6] = 0.02 * np.sign(joints[arm_joints + [13, 14], 0])
    # 7: limb girth
    limbs = arms | legs
    vb[limbs, :, 7] = 0.015 * radials[limbs]
    # 8: belly (front bulge on the lower torso; body faces -y)
    front = torso & (verts[:, 1] < 0)
    bump = np.exp(-(((z - 0.12) / 0.15) ** 2))
    vb[front, 1, 8] = -0.02 * bump[front]
    # 9: hip width
    hips = np.isin(cats, ["pelvis"]) | ((cats == "leg") & (z > hip_z - 0.2))
    vb[hips, 0, 9] = 0.015 * np.sign(x[hips])
    jb[[1, 2], 0, 9] = 0.015 * np.sign(joints[[1, 2], 0])
    return vb, jb


_template_cache: dict = {}


def default_template(gender_tag: str = "male") -> TemplateBody:
    if gender_tag not in _template_cache:
        _template_cache[gender_tag] = build_template(gender_tag=gender_tag)
    return _template_cache[gender_tag]


def select_template(g: float) -> TemplateBody:
    """Pick the gendered template from the gender probability (ties -> male)."""
    if not (0.0 <= g <= 1.0):
        raise ContractViolationError(f"g must lie in [0, 1], got {g}")
    return default_template("male" if g >= 0.5 else "female")
