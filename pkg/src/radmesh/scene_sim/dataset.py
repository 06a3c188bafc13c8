"""Labeled synthetic dataset generation and on-disk layout.

A dataset split is a directory holding manifest.json plus one array-container
record per sequence. Records store occupancy/flow sparsely; loaders densify
on demand.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..body import BodyParams, Mesh, default_template, forward
from ..errors import ConfigurationError
from ..harness.container import ArrayContainer, write_container
from .grid import GridSpec, roi_origin_for_center
from .motion import ACTIONS, ActionSpec, sample_motion_sequence
from .simulate import ClutterConfig, simulate_frame
from .surface import sample_surface_points
from .flow import make_scene_flow_gt
from .types import FlowVolume, LabeledSequence, OccupancyMap, RadarTensorSequence

ROI_DIMS = (32, 32, 24)

TINY_GRID = GridSpec(dims=(61, 55, 31), origin=(-1.525, 0.2, 0.0),
                     voxel_size=(0.05, 0.05, 0.08))


@dataclass
class Subject:
    subject_id: int
    gender_tag: str
    beta: np.ndarray
    pelvis_z: float

    @property
    def g(self) -> float:
        return 1.0 if self.gender_tag == "male" else 0.0


@dataclass
class DatasetProfile:
    """Scene geometry plus split sizes for one synthetic dataset."""

    name: str = "default"
    grid: GridSpec = field(default_factory=GridSpec)
    sensor_pos: tuple = (0.0, -0.4, 1.1)
    frame_rate: float = 10.0
    t_frames: int = 4
    n_train: int = 2000
    n_val: int = 200
    n_test: int = 400
    n_subjects: int = 10
    n_teacher: int = 512
    clutter: ClutterConfig = field(default_factory=ClutterConfig)
    base_seed: int = 20240
    normalize: bool = True

    def area(self) -> tuple:
        """Start-placement bounds keeping subjects clear of the grid walls."""
        lo = np.asarray(self.grid.origin)
        hi = self.grid.upper
        return ((lo[0] + 0.7, hi[0] - 0.7), (lo[1] + 0.8, hi[1] - 0.7))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["grid"] = self.grid.to_dict()
        return d


def profile(name: str, **overrides) -> DatasetProfile:
    if name == "default":
        p = DatasetProfile()
    elif name == "tiny":
        p = DatasetProfile(name="tiny", grid=TINY_GRID,
                           n_train=200, n_val=20, n_test=40)
    elif name == "micro":
        p = DatasetProfile(name="micro", grid=TINY_GRID,
                           n_train=24, n_val=8, n_test=8)
    else:
        raise ConfigurationError(f"unknown dataset profile {name!r}")
    clutter_over = overrides.pop("clutter", None)
    if clutter_over is not None:
        p.clutter = (clutter_over if isinstance(clutter_over, ClutterConfig)
                     else ClutterConfig(**clutter_over))
    for key, val in overrides.items():
        if not hasattr(p, key):
            raise ConfigurationError(f"unknown profile field {key!r}")
        setattr(p, key, val)
    return p


def make_subjects(n_subjects: int, seed: int) -> list[Subject]:
    """Alternating-gender subjects with clipped Gaussian shape draws."""
    rng = np.random.default_rng(seed)
    subjects = []
    for i in range(n_subjects):
        gender = "male" if i % 2 == 0 else "female"
        beta = np.clip(rng.normal(0.0, 0.7, size=10), -2.0, 2.0)
        template = default_template(gender)
        shaped = template.rest_vertices + template.shape_basis @ beta
        pelvis_z = float(-shaped[:, 2].min() + 0.02)
        subjects.append(Subject(i, gender, beta, pelvis_z))
    return subjects


def build_sequence(prof: DatasetProfile, subject: Subject, action: str,
                   seed: int) -> LabeledSequence:
    """Simulate one temporal window with full supervision."""
    rng = np.random.default_rng(seed)
    spec = ActionSpec(name=action, area=prof.area(), beta=subject.beta,
                      g=subject.g, pelvis_z=subject.pelvis_z,
                      frame_rate=prof.frame_rate)
    params = sample_motion_sequence(spec, prof.t_frames, seed)
    template = default_template(subject.gender_tag)
    meshes = [forward(template, p) for p in params]

    frames, occupancy, visible, centers = [], [], [], []
    for t, mesh in enumerate(meshes):
        frame, occ, vis_idx = simulate_frame(
            mesh, prof.sensor_pos, prof.grid, prof.clutter,
            seed=int(rng.integers(2 ** 31)))
        if prof.normalize:
            peak = frame.max()
            if peak > 0:
                frame = frame / peak
        frames.append(frame)
        occupancy.append(occ)
        visible.append(vis_idx)
        centers.append(mesh.vertices[vis_idx].mean(axis=0))

    tensors = RadarTensorSequence(np.stack(frames), prof.grid,
                                  np.asarray(prof.sensor_pos), prof.frame_rate)
    roi_origin = roi_origin_for_center(prof.grid, centers[-1], ROI_DIMS)
    roi_grid = prof.grid.subgrid(roi_origin, ROI_DIMS)
    flow_gt = make_scene_flow_gt(meshes[-2], meshes[-1], roi_grid,
                                 visible_idx=visible[-1])
    teacher = np.stack([
        sample_surface_points(mesh, prof.n_teacher, int(rng.integers(2 ** 31)))
        for mesh in meshes
    ]).astype(np.float32)

    return LabeledSequence(
        tensors=tensors,
        params_per_frame=params,
        meshes=meshes,
        occupancy=occupancy,
        gt_center=np.stack(centers),
        flow_gt=flow_gt,
        teacher_points=teacher,
        visible_idx=visible,
    )


# ---------------------------------------------------------------------------
# serialization

def _ragged_pack(arrays: list[np.ndarray]):
    ptr = np.zeros(len(arrays) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(a) for a in arrays])
    flat = (np.concatenate(arrays, axis=0) if ptr[-1] > 0
            else np.zeros((0,) + arrays[0].shape[1:], dtype=arrays[0].dtype))
    return flat, ptr


def sequence_to_arrays(seq: LabeledSequence) -> dict[str, np.ndarray]:
    params = seq.params_per_frame
    occ_sparse = [np.argwhere(o.values) for o in seq.occupancy]
    occ_idx, occ_ptr = _ragged_pack([a.astype(np.int16) for a in occ_sparse])
    vis_idx, vis_ptr = _ragged_pack([v.astype(np.int32) for v in seq.visible_idx])
    flow = seq.flow_gt.values
    nz = np.argwhere(np.any(flow != 0, axis=0))
    roi_origin = np.round(
        (np.asarray(seq.flow_gt.grid.origin) - np.asarray(seq.tensors.grid.origin))
        / np.asarray(seq.tensors.grid.voxel_size)).astype(np.int64)
    return {
        "frames": seq.tensors.frames.astype(np.float32),
        "alpha": np.stack([p.alpha for p in params]),
        "beta": params[0].beta.copy(),
        "tau": np.stack([p.tau for p in params]),
        "theta": np.stack([p.theta for p in params]),
        "g": np.array([params[0].g]),
        "vertices": np.stack([m.vertices for m in seq.meshes]).astype(np.float32),
        "joints": np.stack([m.joints for m in seq.meshes]).astype(np.float32),
        "visible_idx": vis_idx,
        "visible_ptr": vis_ptr,
        "occ_idx": occ_idx,
        "occ_ptr": occ_ptr,
        "gt_center": seq.gt_center,
        "flow_idx": nz.astype(np.int16),
        "flow_vals": flow[:, nz[:, 0], nz[:, 1], nz[:, 2]].T.astype(np.float32),
        "flow_origin": roi_origin,
        "teacher_points": seq.teacher_points.astype(np.float32),
    }


def arrays_to_sequence(arrays: dict, meta: dict, grid: GridSpec,
                       sensor_pos, frame_rate: float,
                       with_faces: bool = False) -> LabeledSequence:
    t = arrays["frames"].shape[0]
    beta, g = arrays["beta"], float(arrays["g"][0])
    params = [BodyParams(arrays["alpha"][i], beta, arrays["tau"][i],
                         arrays["theta"][i], g) for i in range(t)]
    faces = None
    if with_faces:
        faces = default_template(meta["gender_tag"]).faces
    meshes = [Mesh(arrays["vertices"][i].astype(np.float64),
                   arrays["joints"][i].astype(np.float64), faces)
              for i in range(t)]
    occupancy = []
    for i in range(t):
        dense = np.zeros(grid.dims, dtype=np.uint8)
        sl = arrays["occ_idx"][arrays["occ_ptr"][i]:arrays["occ_ptr"][i + 1]].astype(np.int64)
        dense[sl[:, 0], sl[:, 1], sl[:, 2]] = 1
        occupancy.append(OccupancyMap(grid, dense))
    visible = [
        arrays["visible_idx"][arrays["visible_ptr"][i]:arrays["visible_ptr"][i + 1]].astype(np.int64)
        for i in range(t)
    ]
    roi_grid = grid.subgrid(arrays["flow_origin"], ROI_DIMS)
    flow = np.zeros((3, *ROI_DIMS), dtype=np.float32)
    fi = arrays["flow_idx"].astype(np.int64)
    flow[:, fi[:, 0], fi[:, 1], fi[:, 2]] = arrays["flow_vals"].T
    tensors = RadarTensorSequence(arrays["frames"], grid, sensor_pos, frame_rate)
    return LabeledSequence(tensors, params, meshes, occupancy,
                           arrays["gt_center"], FlowVolume(roi_grid, flow),
                           arrays["teacher_points"], visible)


# ---------------------------------------------------------------------------
# split generation

def record_path(split_dir: Path, index: int) -> Path:
    return Path(split_dir) / f"seq_{index:06d}.rmt"


def write_split(out_dir, prof: DatasetProfile, n_sequences: int, split: str,
                subjects: list[Subject], split_seed: int, progress=None) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digests = []
    for i in range(n_sequences):
        action = ACTIONS[i % len(ACTIONS)]
        subject = subjects[(i // len(ACTIONS)) % len(subjects)]
        seed = int(np.random.SeedSequence([prof.base_seed, split_seed, i])
                   .generate_state(1)[0])
        seq = build_sequence(prof, subject, action, seed)
        arrays = sequence_to_arrays(seq)
        meta = {"action": action, "seed": seed, "subject_id": subject.subject_id,
                "gender_tag": subject.gender_tag, "index": i}
        path = record_path(out_dir, i)
        write_container(path, arrays, meta)
        digests.append(hashlib.sha256(path.read_bytes()).hexdigest())
        if progress is not None:
            progress(i, n_sequences)
    manifest = {
        "split": split,
        "n_sequences": n_sequences,
        "profile": prof.to_dict(),
        "subjects": [{"subject_id": s.subject_id, "gender_tag": s.gender_tag,
                      "beta": s.beta.tolist(), "pelvis_z": s.pelvis_z}
                     for s in subjects],
        "actions": list(ACTIONS),
        "split_seed": split_seed,
        "content_hash": hashlib.sha256("".join(digests).encode()).hexdigest(),
        "format_version": 1,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def generate_dataset(root, prof: DatasetProfile, progress=None) -> dict:
    """Write train/val/test splits under root; returns the split manifests."""
    root = Path(root)
    subjects = make_subjects(prof.n_subjects, prof.base_seed)
    manifests = {}
    for split, n, seed in (("train", prof.n_train, 1),
                           ("val", prof.n_val, 2),
                           ("test", prof.n_test, 3)):
        cb = (lambda i, n_, s=split: progress(s, i, n_)) if progress else None
        manifests[split] = write_split(root / split, prof, n, split, subjects,
                                       seed, progress=cb)
    return manifests


class SplitReader:
    """Random access over one split directory."""

    def __init__(self, split_dir):
        self.dir = Path(split_dir)
        manifest_path = self.dir / "manifest.json"
        if not manifest_path.exists():
            raise ConfigurationError(f"{split_dir} has no manifest.json")
        self.manifest = json.loads(manifest_path.read_text())
        pd = self.manifest["profile"]
        self.grid = GridSpec.from_dict(pd["grid"])
        self.sensor_pos = np.asarray(pd["sensor_pos"], dtype=np.float64)
        self.frame_rate = float(pd["frame_rate"])
        self.n_sequences = int(self.manifest["n_sequences"])

    def __len__(self) -> int:
        return self.n_sequences

    def container(self, index: int) -> ArrayContainer:
        return ArrayContainer(record_path(self.dir, index))

    def arrays(self, index: int) -> tuple[dict, dict]:
        c = self.container(index)
        arrays = c.read_all()
        meta = c.meta
        c.close()
        return arrays, meta

    def sequence(self, index: int, with_faces: bool = False) -> LabeledSequence:
        arrays, meta = self.arrays(index)
        return arrays_to_sequence(arrays, meta, self.grid, self.sensor_pos,
                                  self.frame_rate, with_faces=with_faces)
