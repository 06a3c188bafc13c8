"""Synthetic mmWave observation model: body returns, clutter, noise."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..body import Mesh
from ..errors import EmptyFrameError
from .grid import GridSpec, voxelize_points
from .types import OccupancyMap
from .visibility import hidden_point_removal


@dataclass
class ClutterConfig:
    """Clutter and noise knobs for simulate_frame.

    Body returns follow a(r) = i0 / r^2 with multiplicative lognormal speckle.
    Clutter adds a static back-wall plane, k displaced attenuated ghost copies
    of the body return (multipath), and an i.i.d. Gaussian noise floor
    (clipped at zero).
    """

    i0: float = 1.0
    speckle_sigma: float = 0.35
    wall: bool = True
    wall_intensity: float = 0.06
    ghost_count: int = 2
    ghost_attenuation: float = 0.35
    ghost_offset: tuple[float, float] = (0.7, 1.4)
    noise_mean: float = 0.02
    noise_sigma: float = 0.006

    @classmethod
    def none(cls) -> "ClutterConfig":
        return cls(wall=False, ghost_count=0, noise_mean=0.0, noise_sigma=0.0,
                   speckle_sigma=0.0)


def simulate_frame(mesh: Mesh | None, sensor_pos, grid: GridSpec,
                   clutter: ClutterConfig | None = None, seed: int = 0,
                   normalize: bool = False):
    """Render one radar frame from a posed mesh.

    Returns (frame, occupancy, visible_idx): the intensity volume, the binary
    occupancy of visible vertices (the segmentation ground truth), and the
    indices of visible vertices. Occluded body parts produce no return.
    mesh=None renders a background-only frame (all-zero occupancy).
    """
    clutter = clutter if clutter is not None else ClutterConfig()
    rng = np.random.default_rng(seed)
    sensor_pos = np.asarray(sensor_pos, dtype=np.float64).reshape(3)

    if mesh is None:
        visible_idx = np.zeros(0, dtype=np.int64)
        visible = np.zeros((0, 3))
        occ_values = np.zeros(grid.dims, dtype=np.uint8)
        intensity = np.zeros(0)
        frame = np.zeros(grid.dims, dtype=np.float32)
    else:
        visible_idx = hidden_point_removal(mesh.vertices, sensor_pos)
        visible = mesh.vertices[visible_idx]
        occ_values, _ = voxelize_points(visible, grid, mode="binary")
        if int(occ_values.sum()) == 0:
            raise EmptyFrameError("no visible vertex falls inside the radar grid")
        ranges = np.linalg.norm(visible - sensor_pos, axis=1)
        speckle = (np.exp(rng.normal(0.0, clutter.speckle_sigma, size=len(visible)))
                   if clutter.speckle_sigma > 0 else np.ones(len(visible)))
        intensity = clutter.i0 / np.maximum(ranges, 0.3) ** 2 * speckle
        frame, _ = voxelize_points(visible, grid, mode="max", intensities=intensity)

    for _ in range(clutter.ghost_count):
        if len(visible) == 0:
            break
        ang = rng.uniform(0.0, 2 * np.pi)
        dist = rng.uniform(*clutter.ghost_offset)
        offset = np.array([np.cos(ang) * dist, np.sin(ang) * dist, 0.0])
        ghost, _ = voxelize_points(visible + offset, grid, mode="max",
                                   intensities=intensity * clutter.ghost_attenuation)
        np.maximum(frame, ghost, out=frame)

    if clutter.wall:
        # static plane at the far-y boundary (the room's back wall)
        wall_speckle = np.exp(rng.normal(0.0, 0.25, size=(grid.dims[0], grid.dims[2])))
        wall_vals = (clutter.wall_intensity * wall_speckle).astype(np.float32)
        np.maximum(frame[:, -1, :], wall_vals, out=frame[:, -1, :])

    if clutter.noise_sigma > 0 or clutter.noise_mean > 0:
        noise = rng.normal(clutter.noise_mean, clutter.noise_sigma, size=grid.dims)
        frame = np.maximum(frame, 0.0) + np.clip(noise, 0.0, None).astype(np.float32)

    frame = frame.astype(np.float32)
    if normalize:
        peak = frame.max()
        if peak > 0:
            frame = frame / peak
    return frame, OccupancyMap(grid, occ_values), visible_idx


def make_pseudo_tensor(points, intensities, grid: GridSpec) -> np.ndarray:
    """Project a point cloud into the radar volume (max-intensity voxels)."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        return np.zeros(grid.dims, dtype=np.float32)
    vol, _ = voxelize_points(points, grid, mode="max", intensities=intensities)
    return vol
