"""Voxel grid conventions: the single world<->voxel conversion point.

Cells are half-open intervals [origin + i*size, origin + (i+1)*size); a point
exactly on a shared face belongs to the higher-index cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, ContractViolationError


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned voxel grid: counts, world origin, and per-axis voxel size."""

    dims: tuple[int, int, int] = (121, 111, 31)
    origin: tuple[float, float, float] = (-3.025, 0.2, 0.0)
    voxel_size: tuple[float, float, float] = (0.05, 0.05, 0.08)

    def __post_init__(self):
        if any(d <= 0 for d in self.dims):
            raise ConfigurationError("grid dims must be positive")
        if any(s <= 0 for s in self.voxel_size):
            raise ConfigurationError("voxel size must be positive")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "voxel_size", tuple(float(v) for v in self.voxel_size))

    @property
    def n_voxels(self) -> int:
        return self.dims[0] * self.dims[1] * self.dims[2]

    @property
    def upper(self) -> np.ndarray:
        return np.asarray(self.origin) + np.asarray(self.dims) * np.asarray(self.voxel_size)

    def world_to_voxel(self, points) -> np.ndarray:
        """World points (..., 3) -> integer voxel indices (floor convention)."""
        p = np.asarray(points, dtype=np.float64)
        return np.floor((p - self.origin) / self.voxel_size).astype(np.int64)

    def voxel_center(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.float64)
        return np.asarray(self.origin) + (idx + 0.5) * np.asarray(self.voxel_size)

    def contains_voxel(self, idx) -> np.ndarray:
        idx = np.asarray(idx)
        return np.all((idx >= 0) & (idx < np.asarray(self.dims)), axis=-1)

    def contains_world(self, points) -> np.ndarray:
        return self.contains_voxel(self.world_to_voxel(points))

    def clamp_world(self, points) -> np.ndarray:
        """Clamp world points onto the (half-open) grid volume."""
        p = np.asarray(points, dtype=np.float64)
        hi = self.upper - 1e-9 * np.asarray(self.voxel_size)
        return np.clip(p, np.asarray(self.origin), hi)

    def subgrid(self, origin_voxel, dims) -> "GridSpec":
        """A window of this grid as its own GridSpec (shared conventions)."""
        origin_voxel = np.asarray(origin_voxel, dtype=np.int64)
        dims = tuple(int(d) for d in dims)
        if np.any(origin_voxel < 0) or np.any(origin_voxel + dims > self.dims):
            raise ContractViolationError("subgrid window exceeds parent grid")
        new_origin = np.asarray(self.origin) + origin_voxel * np.asarray(self.voxel_size)
        return GridSpec(dims=dims, origin=tuple(new_origin), voxel_size=self.voxel_size)

    def to_dict(self) -> dict:
        return {"dims": list(self.dims), "origin": list(self.origin),
                "voxel_size": list(self.voxel_size)}

    @classmethod
    def from_dict(cls, d) -> "GridSpec":
        return cls(tuple(d["dims"]), tuple(d["origin"]), tuple(d["voxel_size"]))


def roi_origin_for_center(grid: GridSpec, center_world, roi_dims) -> np.ndarray:
    """Origin voxel of a fixed-size window centered on a world point.

    Windows overflowing the grid are shifted inward (never padded) so the
    result always spans exactly roi_dims voxels.
    """
    roi_dims = np.asarray(roi_dims, dtype=np.int64)
    if np.any(roi_dims > np.asarray(grid.dims)):
        raise ContractViolationError("RoI exceeds the parent grid")
    center_voxel = grid.world_to_voxel(grid.clamp_world(center_world))
    origin = center_voxel - roi_dims // 2
    return np.clip(origin, 0, np.asarray(grid.dims) - roi_dims)


def voxelize_points(points, grid: GridSpec, mode: str = "binary", intensities=None):
    """Scatter points into the grid; returns (volume, n_dropped).

    mode "binary": uint8 occupancy, a voxel is 1 iff it received >= 1 point.
    mode "max":    float32 volume keeping the max intensity per voxel.
    Out-of-grid points are dropped (counted, never fatal).
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if mode not in ("binary", "max"):
        raise ConfigurationError(f"unknown voxelize mode {mode!r}")
    if mode == "max":
        if intensities is None:
            raise ContractViolationError("mode='max' requires intensities")
        intensities = np.asarray(intensities, dtype=np.float64).reshape(-1)
        if intensities.shape[0] != points.shape[0]:
            raise ContractViolationError("intensities must match points")

    idx = grid.world_to_voxel(points)
    inside = grid.contains_voxel(idx)
    n_dropped = int((~inside).sum())
    idx = idx[inside]

    if mode == "binary":
        vol = np.zeros(grid.dims, dtype=np.uint8)
        vol[idx[:, 0], idx[:, 1], idx[:, 2]] = 1
        return vol, n_dropped

    vol = np.zeros(grid.dims, dtype=np.float32)
    np.maximum.at(vol, (idx[:, 0], idx[:, 1], idx[:, 2]), intensities[inside])
    return vol, n_dropped
