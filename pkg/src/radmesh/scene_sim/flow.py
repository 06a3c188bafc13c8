"""Ground-truth scene flow volumes from consecutive mesh pairs."""

from __future__ import annotations

import numpy as np

from ..body import Mesh
from ..errors import ContractViolationError
from .grid import GridSpec
from .types import FlowVolume


def make_scene_flow_gt(mesh_prev: Mesh, mesh_curr: Mesh, roi_grid: GridSpec,
                       visible_idx=None) -> FlowVolume:
    """Per-voxel mean vertex displacement, anchored at current-frame voxels.

    A voxel containing >= 1 current-frame vertex gets the mean displacement
    (v_curr - v_prev) of those vertices (meters/frame); all other voxels are
    zero. `visible_idx` restricts the anchoring to the visible surface so the
    flow support matches the occupancy ground truth.
    """
    if mesh_prev.vertices.shape != mesh_curr.vertices.shape:
        raise ContractViolationError("meshes must share vertex count and correspondence")
    verts = mesh_curr.vertices
    disp = mesh_curr.vertices - mesh_prev.vertices
    if visible_idx is not None:
        verts = verts[visible_idx]
        disp = disp[visible_idx]

    idx = roi_grid.world_to_voxel(verts)
    inside = roi_grid.contains_voxel(idx)
    idx, disp = idx[inside], disp[inside]

    dims = roi_grid.dims
    total = np.zeros((3, *dims), dtype=np.float64)
    count = np.zeros(dims, dtype=np.int64)
    np.add.at(count, (idx[:, 0], idx[:, 1], idx[:, 2]), 1)
    for c in range(3):
        np.add.at(total[c], (idx[:, 0], idx[:, 1], idx[:, 2]), disp[:, c])
    values = np.divide(total, count, out=np.zeros_like(total), where=count > 0)
    return FlowVolume(roi_grid, values.astype(np.float32))
