"""Set-abstraction point encoder shared by the student shape branch and teacher.

Two levels of farthest-point sampling + radius grouping + shared MLPs with
max-pooling, followed by a global max-pool projected to the token width.
Farthest-point sampling starts from an index derived from a content hash of
the input so repeated evaluation is bit-stable.
"""

from __future__ import annotations

import zlib

import numpy as np
import torch
import torch.nn as nn

from .points import PointSet5, canonical_order


def content_hash_start(xyz: torch.Tensor) -> torch.Tensor:
    """Deterministic FPS start indices from a CRC of each sample's bytes."""
    n = xyz.shape[1]
    starts = [zlib.crc32(np.ascontiguousarray(
        xyz[b].detach().cpu().numpy().astype(np.float32)).tobytes()) % n
        for b in range(xyz.shape[0])]
    return torch.tensor(starts, dtype=torch.long, device=xyz.device)


def farthest_point_sample(xyz: torch.Tensor, n_samples: int) -> torch.Tensor:
    """(B, N, 3) -> (B, n_samples) indices, seeded by content hash."""
    b, n, _ = xyz.shape
    device = xyz.device
    idx = torch.zeros(b, n_samples, dtype=torch.long, device=device)
    dist = torch.full((b, n), float("inf"), device=device)
    farthest = content_hash_start(xyz)
    batch = torch.arange(b, device=device)
    for i in range(n_samples):
        idx[:, i] = farthest
        centroid = xyz[batch, farthest][:, None]
        d = ((xyz - centroid) ** 2).sum(-1)
        dist = torch.minimum(dist, d)
        farthest = dist.argmax(-1)
    return idx


def gather_points(data: torch.Tensor, idx: torch.Tensor) -> torch.Tensor:
    """(B, N, C), (B, S) -> (B, S, C)."""
    b = data.shape[0]
    batch = torch.arange(b, device=data.device)[:, None].expand_as(idx)
    return data[batch, idx]


def ball_group(xyz: torch.Tensor, centers: torch.Tensor, radius: float,
               nsample: int) -> torch.Tensor:
    """(B, N, 3), (B, S, 3) -> (B, S, nsample) neighbor indices.

    Neighbors are the nsample nearest points; those beyond the radius are
    replaced by the nearest one (standard padded ball query).
    """
    d2 = torch.cdist(centers, xyz)  # (B, S, N)
    k = min(nsample, xyz.shape[1])
    dist, idx = torch.sort(d2, dim=-1, stable=True)
    dist, idx = dist[..., :k], idx[..., :k]
    out_of_ball = dist > radius
    idx = torch.where(out_of_ball, idx[..., :1].expand_as(idx), idx)
    if k < nsample:
        idx = torch.cat([idx, idx[..., :1].expand(*idx.shape[:2], nsample - k)], dim=-1)
    return idx


class SetAbstraction(nn.Module):
    def __init__(self, npoint, radius, nsample, in_channels, mlp):
        super().__init__()
        self.npoint = npoint
        self.radius = radius
        self.nsample = nsample
        layers = []
        last = in_channels + 3
        for out in mlp:
            layers += [nn.Conv2d(last, out, 1), nn.GroupNorm(min(4, out), out), nn.ReLU()]
            last = out
        self.mlp = nn.Sequential(*layers)

    def forward(self, xyz, feats):
        centers_idx = farthest_point_sample(xyz, self.npoint)
        centers = gather_points(xyz, centers_idx)
        group_idx = ball_group(xyz, centers, self.radius, self.nsample)
        b, s, n = group_idx.shape
        flat = group_idx.reshape(b, s * n)
        grouped_xyz = gather_points(xyz, flat).reshape(b, s, n, 3) - centers[:, :, None]
        parts = [grouped_xyz]
        if feats is not None:
            parts.append(gather_points(feats, flat).reshape(b, s, n, -1))
        grouped = torch.cat(parts, dim=-1).permute(0, 3, 1, 2)  # (B, C, S, n)
        out = self.mlp(grouped).max(dim=-1).values  # (B, C', S)
        return centers, out.permute(0, 2, 1)


class PointCloudEncoder(nn.Module):
    """Two SA levels + global max-pool to a fixed-width token.

    in_features counts the per-point features beyond xyz (2 for the student's
    intensity+likelihood columns, 0 for the teacher's bare points).
    """

    def __init__(self, in_features: int, d_token: int,
                 sa1=(128, 0.25, 32, (64, 64, 128)),
                 sa2=(32, 0.7, 32, (128, 128, 256)),
                 global_mlp=(256, 512)):
        super().__init__()
        self.in_features = in_features
        n1, r1, s1, mlp1 = sa1
        n2, r2, s2, mlp2 = sa2
        self.sa1 = SetAbstraction(n1, r1, s1, in_features, mlp1)
        self.sa2 = SetAbstraction(n2, r2, s2, mlp1[-1], mlp2)
        layers = []
        last = mlp2[-1] + 3
        for out in global_mlp:
            layers += [nn.Conv1d(last, out, 1), nn.GroupNorm(4, out), nn.ReLU()]
            last = out
        self.global_mlp = nn.Sequential(*layers)
        self.proj = nn.Linear(last, d_token)
        self.d_token = d_token

    def forward(self, points: torch.Tensor) -> torch.Tensor:
        """(B, N, 3 + in_features) -> (B, d_token)."""
        xyz = points[..., :3].contiguous()
        feats = points[..., 3:].contiguous() if self.in_features > 0 else None
        xyz1, f1 = self.sa1(xyz, feats)
        xyz2, f2 = self.sa2(xyz1, f1)
        g = torch.cat([xyz2, f2], dim=-1).permute(0, 2, 1)  # (B, C+3, S)
        pooled = self.global_mlp(g).max(dim=-1).values
        return self.proj(pooled)


def canonicalize_pointset(ps: PointSet5) -> np.ndarray:
    pts = ps.points
    order = canonical_order(pts[:, 4], pts[:, 3], np.arange(len(pts)))
    return pts[order]


def encode_shape(ps: PointSet5, encoder: PointCloudEncoder):
    """Encode one point set into a shape token (canonical order applied first)."""
    from .types import ShapeToken
    pts = canonicalize_pointset(ps)
    encoder.eval()
    with torch.no_grad():
        token = encoder(torch.as_tensor(pts, dtype=torch.float32)[None])[0]
    return ShapeToken(token.numpy())
