"""Tri-planar projections, coarse centers, and fixed-size RoI cropping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolationError
from ..scene_sim.grid import GridSpec, roi_origin_for_center

ROI_DIMS = (32, 32, 24)


@dataclass
class CoarseCenter:
    """Estimated human center in world meters, clamped inside the grid."""

    p_hat: np.ndarray

    def __post_init__(self):
        self.p_hat = np.asarray(self.p_hat, dtype=np.float64).reshape(3)
        if not np.isfinite(self.p_hat).all():
            raise ContractViolationError("coarse center must be finite")


@dataclass
class RoiVolume:
    """Fixed-size window of the radar tensor plus its placement bookkeeping."""

    values: np.ndarray           # (X', Y', Z')
    roi_origin_voxel: np.ndarray  # (3,) offset into the parent grid
    grid: GridSpec               # parent grid

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        self.roi_origin_voxel = np.asarray(self.roi_origin_voxel, dtype=np.int64).reshape(3)

    @property
    def roi_grid(self) -> GridSpec:
        return self.grid.subgrid(self.roi_origin_voxel, self.values.shape)


@dataclass
class ReflectionVolume:
    """Per-voxel human-reflection probabilities over an RoI window."""

    probs: np.ndarray             # (X', Y', Z') in [0, 1]
    roi_origin_voxel: np.ndarray
    source_intensity: np.ndarray  # the cropped raw tensor, carried alongside
    grid: GridSpec                # parent grid

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float32)
        self.roi_origin_voxel = np.asarray(self.roi_origin_voxel, dtype=np.int64).reshape(3)
        self.source_intensity = np.asarray(self.source_intensity, dtype=np.float32)
        if self.probs.shape != self.source_intensity.shape:
            raise ContractViolationError("probs and source intensity must share shape")
        if self.probs.min() < 0.0 or self.probs.max() > 1.0:
            raise ContractViolationError("probabilities must lie in [0, 1]")

    @property
    def roi_grid(self) -> GridSpec:
        return self.grid.subgrid(self.roi_origin_voxel, self.probs.shape)


def project_views(frame: np.ndarray):
    """Max-project a (X, Y, Z) tensor onto the XY, YZ and XZ planes."""
    frame = np.asarray(frame)
    if frame.ndim != 3:
        raise ContractViolationError("frame must be a 3D tensor")
    return frame.max(axis=2), frame.max(axis=0), frame.max(axis=1)


def combine_view_centers(xy, yz, xz) -> np.ndarray:
    """Average the per-view 2D centers over their shared axes (voxel units)."""
    xy, yz, xz = (np.asarray(v, dtype=np.float64).reshape(2) for v in (xy, yz, xz))
    return np.array([
        (xy[0] + xz[0]) / 2.0,
        (xy[1] + yz[0]) / 2.0,
        (yz[1] + xz[1]) / 2.0,
    ])


def crop_at_origin(frame: np.ndarray, origin, dims=ROI_DIMS) -> np.ndarray:
    origin = np.asarray(origin, dtype=np.int64)
    x, y, z = origin
    dx, dy, dz = dims
    return frame[x:x + dx, y:y + dy, z:z + dz]


def crop_roi(frame: np.ndarray, center: CoarseCenter, grid: GridSpec,
             dims=ROI_DIMS) -> RoiVolume:
    """Crop the fixed-size RoI around the coarse center (shift-inward at borders)."""
    origin = roi_origin_for_center(grid, center.p_hat, dims)
    return RoiVolume(crop_at_origin(frame, origin, dims).copy(), origin, grid)
