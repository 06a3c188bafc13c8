"""Observation and supervision bundles produced by the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..body import BodyParams, Mesh
from ..errors import ContractViolationError
from .grid import GridSpec


@dataclass
class RadarTensorSequence:
    """One temporal window of dense Cartesian radar intensity volumes."""

    frames: np.ndarray              # (T, X, Y, Z) nonnegative float32
    grid: GridSpec
    sensor_pos: np.ndarray          # (3,) meters
    frame_rate: float = 10.0

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float32)
        self.sensor_pos = np.asarray(self.sensor_pos, dtype=np.float64).reshape(3)
        if self.frames.ndim != 4 or self.frames.shape[1:] != self.grid.dims:
            raise ContractViolationError(
                f"frames {self.frames.shape} do not match grid {self.grid.dims}")
        if not np.isfinite(self.frames).all() or (self.frames < 0).any():
            raise ContractViolationError("intensities must be finite and nonnegative")

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


@dataclass
class OccupancyMap:
    """Binary per-voxel occupancy on some grid."""

    grid: GridSpec
    values: np.ndarray  # (X, Y, Z) uint8 in {0, 1}

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.uint8)
        if self.values.shape != self.grid.dims:
            raise ContractViolationError("occupancy shape does not match grid")
        if not np.isin(self.values, (0, 1)).all():
            raise ContractViolationError("occupancy must be binary")


@dataclass
class FlowVolume:
    """Per-voxel displacement field (meters/frame) on an RoI grid."""

    grid: GridSpec
    values: np.ndarray  # (3, X', Y', Z') float32

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.shape != (3, *self.grid.dims):
            raise ContractViolationError("flow shape must be (3, X', Y', Z')")
        if not np.isfinite(self.values).all():
            raise ContractViolationError("flow values must be finite")


@dataclass
class LabeledSequence:
    """Supervision bundle for one temporal window.

    gt_center[t] is the mean of frame t's visible vertices; flow_gt covers the
    last frame on an RoI grid anchored at the final gt center.
    """

    tensors: RadarTensorSequence
    params_per_frame: list[BodyParams]
    meshes: list[Mesh]
    occupancy: list[OccupancyMap]
    gt_center: np.ndarray            # (T, 3) meters
    flow_gt: FlowVolume
    teacher_points: np.ndarray       # (T, N_t, 3)
    visible_idx: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        t = self.tensors.n_frames
        if not (len(self.params_per_frame) == len(self.meshes)
                == len(self.occupancy) == t == len(self.gt_center)
                == self.teacher_points.shape[0]):
            raise ContractViolationError("all sequence components must share frame count")
        for occ in self.occupancy:
            if occ.grid.dims != self.tensors.grid.dims:
                raise ContractViolationError("occupancy grid mismatch")
