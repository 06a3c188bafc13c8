"""Difference volumes and the motion branch (token encoder + flow decoder)."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from ..errors import ContractViolationError


def difference_volume(volumes) -> np.ndarray:
    """Stack R_T - R_i for i = 1..T-1 over aligned reflection volumes."""
    if len(volumes) < 2:
        raise ContractViolationError("need at least two frames for differences")
    origin = volumes[-1].roi_origin_voxel
    shape = volumes[-1].probs.shape
    for v in volumes:
        if not np.array_equal(v.roi_origin_voxel, origin) or v.probs.shape != shape:
            raise ContractViolationError(
                "reflection volumes must share one RoI to be differenced")
    last = volumes[-1].probs.astype(np.float32)
    return np.stack([last - v.probs for v in volumes[:-1]], axis=0)


def _gn(ch):
    return nn.GroupNorm(min(4, ch), ch)


class MotionNet(nn.Module):
    """Strided 3D encoder -> pooled motion token; mirrored decoder -> flow.

    The decoder only runs in training mode; inference keeps the token path.
    """

    def __init__(self, in_channels: int = 3, d_token: int = 256,
                 channels=(32, 64, 128)):
        super().__init__()
        c0, c1, c2 = channels
        self.stem = nn.Sequential(
            nn.Conv3d(in_channels, c0, 3, stride=2, padding=1), _gn(c0), nn.ReLU(),
            nn.Conv3d(c0, c0, 3, padding=1), _gn(c0), nn.ReLU(),
        )
        self.down1 = nn.Sequential(
            nn.Conv3d(c0, c1, 3, stride=2, padding=1), _gn(c1), nn.ReLU(),
            nn.Conv3d(c1, c1, 3, padding=1), _gn(c1), nn.ReLU(),
        )
        self.down2 = nn.Sequential(
            nn.Conv3d(c1, c2, 3, stride=2, padding=1), _gn(c2), nn.ReLU(),
            nn.Conv3d(c2, c2, 3, padding=1), _gn(c2), nn.ReLU(),
        )
        self.pool = nn.AdaptiveAvgPool3d(1)
        self.token_head = nn.Linear(c2, d_token)
        # flow decoder (training only)
        self.up2 = nn.ConvTranspose3d(c2, c1, 2, stride=2)
        self.dec2 = nn.Sequential(nn.Conv3d(2 * c1, c1, 3, padding=1), _gn(c1), nn.ReLU())
        self.up1 = nn.ConvTranspose3d(c1, c0, 2, stride=2)
        self.dec1 = nn.Sequential(nn.Conv3d(2 * c0, c0, 3, padding=1), _gn(c0), nn.ReLU())
        self.up0 = nn.ConvTranspose3d(c0, c0, 2, stride=2)
        self.flow_head = nn.Conv3d(c0, 3, 3, padding=1)

    def encoder_parameters(self):
        mods = [self.stem, self.down1, self.down2, self.token_head]
        for m in mods:
            yield from m.parameters()

    def decoder_parameters(self):
        mods = [self.up2, self.dec2, self.up1, self.dec1, self.up0, self.flow_head]
        for m in mods:
            yield from m.parameters()

    def forward(self, diff: torch.Tensor, with_flow: bool):
        """(B, T-1, X', Y', Z') -> (token (B, d), flow (B,3,X',Y',Z') or None)."""
        e0 = self.stem(diff)
        e1 = self.down1(e0)
        e2 = self.down2(e1)
        token = self.token_head(self.pool(e2).flatten(1))
        if not with_flow:
            return token, None
        d2 = self.dec2(torch.cat([self.up2(e2), e1], dim=1))
        d1 = self.dec1(torch.cat([self.up1(d2), e0], dim=1))
        flow = self.flow_head(self.up0(d1))
        return token, flow


def encode_motion(diff: np.ndarray, net: MotionNet, mode: str = "eval"):
    """Single-window wrapper; training mode also returns the flow volume."""
    from .types import MotionToken
    if mode not in ("train", "eval"):
        raise ContractViolationError(f"unknown mode {mode!r}")
    with_flow = mode == "train"
    net.eval()
    with torch.no_grad():
        token, flow = net(torch.as_tensor(diff, dtype=torch.float32)[None], with_flow)
    if with_flow:
        return MotionToken(token[0].numpy()), flow[0].numpy()
    return MotionToken(token[0].numpy()), None
