"""3D cell-averaging CFAR over radar intensity volumes."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolationError
from ..scene_sim.grid import GridSpec


def _padded_cumsum(frame: np.ndarray) -> np.ndarray:
    c = np.zeros(tuple(d + 1 for d in frame.shape), dtype=np.float64)
    c[1:, 1:, 1:] = frame.cumsum(0).cumsum(1).cumsum(2)
    return c


def _box_sums(cum: np.ndarray, dims, ext) -> tuple[np.ndarray, np.ndarray]:
    """Per-voxel sums and counts over boxes of half-extent ext, clipped at edges."""
    los, his, lens = [], [], []
    for n, e in zip(dims, ext):
        idx = np.arange(n)
        lo = np.clip(idx - e, 0, n)
        hi = np.clip(idx + e + 1, 0, n)
        los.append(lo)
        his.append(hi)
        lens.append(hi - lo)
    lx, ly, lz = los
    hx, hy, hz = his

    def take(ax, ay, az):
        return cum[ax[:, None, None], ay[None, :, None], az[None, None, :]]

    sums = (take(hx, hy, hz) - take(lx, hy, hz) - take(hx, ly, hz) - take(hx, hy, lz)
            + take(lx, ly, hz) + take(lx, hy, lz) + take(hx, ly, lz) - take(lx, ly, lz))
    counts = (lens[0][:, None, None] * lens[1][None, :, None] * lens[2][None, None, :])
    return sums, counts.astype(np.float64)


def cfar_extract(frame: np.ndarray, grid: GridSpec, guard=(1, 1, 1),
                 train=(2, 2, 2), rate: float = 3.0):
    """Cell-averaging CFAR detection in 3D.

    A voxel is detected when its intensity exceeds rate times the mean of the
    surrounding training shell (the box of half-extent guard+train minus the
    guard box). Edge voxels use whatever part of the shell is available.
    Returns (points, intensities): world-frame voxel centers and values.
    """
    frame = np.asarray(frame, dtype=np.float64)
    guard = tuple(int(g) for g in guard)
    train = tuple(int(t) for t in train)
    if any(t < 1 for t in train) or any(g < 0 for g in guard):
        raise ContractViolationError("train extents must be >= 1, guard >= 0")
    if any(g >= g + t for g, t in zip(guard, train)) or rate <= 0:
        raise ContractViolationError("rate must be positive")

    cum = _padded_cumsum(frame)
    big_ext = tuple(g + t for g, t in zip(guard, train))
    big_sum, big_count = _box_sums(cum, frame.shape, big_ext)
    guard_sum, guard_count = _box_sums(cum, frame.shape, guard)
    shell_sum = big_sum - guard_sum
    shell_count = big_count - guard_count
    mean = np.divide(shell_sum, shell_count,
                     out=np.full_like(shell_sum, np.inf), where=shell_count > 0)
    detected = frame > rate * mean

    idx = np.argwhere(detected)
    points = grid.voxel_center(idx)
    intensities = frame[detected].astype(np.float64)
    return points, intensities
