"""Model size presets and constructors for both pipeline stages."""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from ..errors import ConfigurationError
from ..hre.models import CoarseLocalizer, VoxelSegmenter
from ..scene_sim.grid import GridSpec
from .heads import MeshRegressor, Teacher


@dataclass
class ModelConfig:
    """Width/size knobs for every network in the pipeline."""

    name: str = "paper"
    d_token: int = 256
    k_points: int = 512
    n_frames: int = 4
    loc_channels: tuple = (16, 32, 64)
    seg_channels: tuple = (8, 16, 32)
    sa1: tuple = (128, 0.25, 32, (64, 64, 128))
    sa2: tuple = (32, 0.7, 32, (128, 128, 256))
    global_mlp: tuple = (512, 1024)
    motion_channels: tuple = (32, 96, 192)
    attn_heads: int = 4
    attn_layers: int = 2
    attn_ff: int = 2048
    head_hidden: int = 1024

    def build_localizer(self, grid: GridSpec, seed: int | None = None) -> CoarseLocalizer:
        if seed is not None:
            torch.manual_seed(seed)
        return CoarseLocalizer(grid, self.loc_channels)

    def build_segmenter(self, seed: int | None = None) -> VoxelSegmenter:
        if seed is not None:
            torch.manual_seed(seed)
        return VoxelSegmenter(self.seg_channels)

    def build_regressor(self, seed: int | None = None) -> MeshRegressor:
        if seed is not None:
            torch.manual_seed(seed)
        return MeshRegressor(self.d_token, self.n_frames, self.sa1, self.sa2,
                             self.global_mlp, self.motion_channels,
                             self.attn_heads, self.attn_layers, self.attn_ff,
                             self.head_hidden)

    def build_teacher(self, seed: int | None = None) -> Teacher:
        if seed is not None:
            torch.manual_seed(seed)
        return Teacher(self.d_token, self.sa1, self.sa2, self.global_mlp,
                       self.head_hidden)


def model_preset(name: str) -> ModelConfig:
    if name == "paper":
        return ModelConfig()
    if name == "desk":
        return ModelConfig(
            name="desk",
            d_token=96,
            k_points=256,
            loc_channels=(8, 16, 32),
            seg_channels=(8, 16, 32),
            sa1=(96, 0.25, 24, (32, 32, 64)),
            sa2=(24, 0.7, 24, (64, 64, 128)),
            global_mlp=(128, 192),
            motion_channels=(16, 32, 64),
            attn_ff=256,
            head_hidden=192,
        )
    raise ConfigurationError(f"unknown model preset {name!r}")
