"""Stage-1 composition: one shared RoI per window, per-frame segmentation."""

from __future__ import annotations

import numpy as np

from ..scene_sim.grid import roi_origin_for_center
from ..scene_sim.types import RadarTensorSequence
from .models import CoarseLocalizer, VoxelSegmenter, segment_voxels
from .roi import ROI_DIMS, RoiVolume, crop_at_origin


def extract(sequence: RadarTensorSequence, localizer, segmenter: VoxelSegmenter,
            roi_dims=ROI_DIMS):
    """Extract T reflection volumes sharing a single RoI.

    The RoI is anchored at the last frame's coarse center and applied to every
    frame so that downstream frame differences stay spatially aligned. The
    localizer only needs a predict_center(frame, grid) method.
    """
    grid = sequence.grid
    center = localizer.predict_center(sequence.frames[-1], grid)
    origin = roi_origin_for_center(grid, center.p_hat, roi_dims)
    volumes = []
    for t in range(sequence.n_frames):
        roi = RoiVolume(crop_at_origin(sequence.frames[t], origin, roi_dims).copy(),
                        origin, grid)
        volumes.append(segment_voxels(roi, segmenter))
    return volumes


class OracleLocalizer:
    """Test double that returns a fixed center (geometry-only pipelines)."""

    def __init__(self, center_world):
        self.center_world = np.asarray(center_world, dtype=np.float64)

    def predict_center(self, frame, grid):
        from .roi import CoarseCenter
        return CoarseCenter(grid.clamp_world(self.center_world))
