"""Stage-1 networks: tri-planar coarse localizer and 3D voxel segmenter."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from ..errors import ContractViolationError
from ..scene_sim.grid import GridSpec
from .roi import (
    ROI_DIMS,
    CoarseCenter,
    ReflectionVolume,
    RoiVolume,
    combine_view_centers,
    project_views,
)


def _gn(ch):
    return nn.GroupNorm(min(4, ch), ch)


class ViewBranch(nn.Module):
    """3 strided convs + global pooling + linear head -> 2D center (voxels)."""

    def __init__(self, out_dims, channels=(16, 32, 64)):
        super().__init__()
        c1, c2, c3 = channels
        self.net = nn.Sequential(
            nn.Conv2d(1, c1, 3, stride=2, padding=1), _gn(c1), nn.ReLU(),
            nn.Conv2d(c1, c2, 3, stride=2, padding=1), _gn(c2), nn.ReLU(),
            nn.Conv2d(c2, c3, 3, stride=2, padding=1), _gn(c3), nn.ReLU(),
            nn.AdaptiveAvgPool2d(1), nn.Flatten(),
            nn.Linear(c3, 2),
        )
        self.register_buffer("out_dims", torch.tensor(out_dims, dtype=torch.float32))

    def forward(self, x):
        # sigmoid keeps predictions on-grid and starts mid-grid at init
        return torch.sigmoid(self.net(x)) * self.out_dims


class CoarseLocalizer(nn.Module):
    """One branch per orthogonal projection; estimates combine over shared axes."""

    def __init__(self, grid: GridSpec, channels=(16, 32, 64)):
        super().__init__()
        x, y, z = grid.dims
        self.grid = grid
        self.branch_xy = ViewBranch((x, y), channels)
        self.branch_yz = ViewBranch((y, z), channels)
        self.branch_xz = ViewBranch((x, z), channels)

    def forward(self, views_xy, views_yz, views_xz):
        """Batched view tensors (B,1,H,W) -> voxel-coordinate center (B,3)."""
        xy = self.branch_xy(views_xy)
        yz = self.branch_yz(views_yz)
        xz = self.branch_xz(views_xz)
        return torch.stack([
            (xy[:, 0] + xz[:, 0]) / 2.0,
            (xy[:, 1] + yz[:, 0]) / 2.0,
            (yz[:, 1] + xz[:, 1]) / 2.0,
        ], dim=1)

    @torch.no_grad()
    def predict_center(self, frame: np.ndarray, grid: GridSpec | None = None) -> CoarseCenter:
        grid = grid or self.grid
        self.eval()
        vxy, vyz, vxz = project_views(frame)
        t = lambda a: torch.as_tensor(np.ascontiguousarray(a), dtype=torch.float32)[None, None]
        voxel = self(t(vxy), t(vyz), t(vxz))[0].numpy()
        world = grid.voxel_center(voxel - 0.5)  # fractional voxel -> world
        return CoarseCenter(grid.clamp_world(world))


def coarse_localize(views, model: CoarseLocalizer, grid: GridSpec) -> CoarseCenter:
    """Run the localizer on precomputed (XY, YZ, XZ) projections."""
    vxy, vyz, vxz = views
    model.eval()
    with torch.no_grad():
        t = lambda a: torch.as_tensor(np.ascontiguousarray(a), dtype=torch.float32)[None, None]
        voxel = model(t(vxy), t(vyz), t(vxz))[0].numpy()
    return CoarseCenter(grid.clamp_world(grid.voxel_center(voxel - 0.5)))


class ConvBlock3d(nn.Module):
    def __init__(self, cin, cout):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv3d(cin, cout, 3, padding=1), _gn(cout), nn.ReLU(),
            nn.Conv3d(cout, cout, 3, padding=1), _gn(cout), nn.ReLU(),
        )

    def forward(self, x):
        return self.net(x)


class VoxelSegmenter(nn.Module):
    """3D encoder-decoder with two halvings and skip connections, sigmoid head."""

    def __init__(self, channels=(8, 16, 32)):
        super().__init__()
        c0, c1, c2 = channels
        self.enc0 = ConvBlock3d(1, c0)
        self.down1 = nn.Conv3d(c0, c1, 2, stride=2)
        self.enc1 = ConvBlock3d(c1, c1)
        self.down2 = nn.Conv3d(c1, c2, 2, stride=2)
        self.bottom = ConvBlock3d(c2, c2)
        self.up1 = nn.ConvTranspose3d(c2, c1, 2, stride=2)
        self.dec1 = ConvBlock3d(2 * c1, c1)
        self.up2 = nn.ConvTranspose3d(c1, c0, 2, stride=2)
        self.dec0 = ConvBlock3d(2 * c0, c0)
        self.head = nn.Conv3d(c0, 1, 1)

    def forward(self, x):
        s0 = self.enc0(x)
        s1 = self.enc1(self.down1(s0))
        b = self.bottom(self.down2(s1))
        d1 = self.dec1(torch.cat([self.up1(b), s1], dim=1))
        d0 = self.dec0(torch.cat([self.up2(d1), s0], dim=1))
        return torch.sigmoid(self.head(d0))[:, 0]


def segment_voxels(roi: RoiVolume, model: VoxelSegmenter) -> ReflectionVolume:
    """Per-voxel human-reflection probabilities for one RoI window."""
    model.eval()
    with torch.no_grad():
        x = torch.as_tensor(roi.values, dtype=torch.float32)[None, None]
        probs = model(x)[0].numpy()
    if probs.shape != roi.values.shape:
        raise ContractViolationError("segmenter changed the RoI resolution")
    return ReflectionVolume(probs, roi.roi_origin_voxel, roi.values, roi.grid)
