"""Top-K point lifting from reflection volumes."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolationError
from ..hre.roi import ReflectionVolume

K_POINTS = 512


@dataclass
class PointSet5:
    """K points with 5 features: world xyz, radar intensity, likelihood.

    Rows are canonically ordered by descending likelihood, then descending
    intensity, then ascending linear voxel index.
    """

    points: np.ndarray  # (K, 5)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float32)
        if self.points.ndim != 2 or self.points.shape[1] != 5:
            raise ContractViolationError("PointSet5 expects a (K, 5) array")
        lik = self.points[:, 4]
        if lik.min() < 0.0 or lik.max() > 1.0:
            raise ContractViolationError("likelihood column must lie in [0, 1]")

    @property
    def xyz(self) -> np.ndarray:
        return self.points[:, :3]


def canonical_order(likelihood, intensity, linear_index) -> np.ndarray:
    """Sort key shared by top-K selection and encoder canonicalization."""
    return np.lexsort((linear_index, -intensity, -likelihood))


def select_topk_points(volume: ReflectionVolume, k: int = K_POINTS) -> PointSet5:
    """Lift the k most likely voxels to world-frame points with 5 features."""
    probs = volume.probs
    n = probs.size
    if k > n:
        raise ContractViolationError(f"k={k} exceeds voxel count {n}")
    lik = probs.reshape(-1)
    inten = volume.source_intensity.reshape(-1)
    order = canonical_order(lik, inten, np.arange(n))[:k]
    idx3 = np.stack(np.unravel_index(order, probs.shape), axis=1)
    centers = volume.roi_grid.voxel_center(idx3)
    pts = np.concatenate([centers, inten[order, None], lik[order, None]],
                         axis=1).astype(np.float32)
    return PointSet5(pts)
