"""Parameter regression head, the assembled stage-2 model, and the teacher."""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn

from ..body import NUM_BETAS, NUM_JOINTS, BodyParams
from ..errors import PipelineOrderError
from .attention import MotionShapeAttention
from .motion_net import MotionNet
from .pointnet import PointCloudEncoder, canonicalize_pointset
from .types import ParamTensors, ShapeToken

N_PARAM_OUT = 3 + NUM_BETAS + 3 + NUM_JOINTS * 3 + 1  # 83: 82 reals + g logit


class RegressionHead(nn.Module):
    """Two-layer MLP emitting (alpha, beta, tau, theta) plus a gender logit."""

    def __init__(self, d_in: int = 256, hidden: int = 512):
        super().__init__()
        self.net = nn.Sequential(nn.Linear(d_in, hidden), nn.ReLU(),
                                 nn.Linear(hidden, N_PARAM_OUT))

    def forward(self, fused: torch.Tensor) -> ParamTensors:
        raw = self.net(fused)
        alpha = raw[:, 0:3]
        beta = raw[:, 3:13]
        tau = raw[:, 13:16]
        theta = raw[:, 16:82].reshape(-1, NUM_JOINTS, 3)
        g = torch.sigmoid(raw[:, 82])
        return ParamTensors(alpha, beta, tau, theta, g)


def params_to_numpy(pt: ParamTensors, index: int = 0) -> BodyParams:
    return BodyParams(pt.alpha[index].detach().cpu().numpy().astype(np.float64),
                      pt.beta[index].detach().cpu().numpy().astype(np.float64),
                      pt.tau[index].detach().cpu().numpy().astype(np.float64),
                      pt.theta[index].detach().cpu().numpy().astype(np.float64),
                      float(pt.g[index]))


def regress_params(fused, head: RegressionHead) -> BodyParams:
    """Decode one fused token into body parameters."""
    head.eval()
    with torch.no_grad():
        vec = torch.as_tensor(np.asarray(fused), dtype=torch.float32).reshape(1, -1)
        return params_to_numpy(head(vec))


class MeshRegressor(nn.Module):
    """Stage-2 student: shape encoder, motion branch, fusion, regression head.

    With the motion branch ablated, a learned query token takes the motion
    token's slot so the fused readout stays at position 0 and no motion-net
    weight ever receives gradient.
    """

    def __init__(self, d_token: int = 256, n_frames: int = 4,
                 sa1=(128, 0.25, 32, (64, 64, 128)),
                 sa2=(32, 0.7, 32, (128, 128, 256)),
                 global_mlp=(256, 512),
                 motion_channels=(32, 64, 128),
                 attn_heads: int = 4, attn_layers: int = 2,
                 attn_ff: int | None = None, head_hidden: int = 512):
        super().__init__()
        self.n_frames = n_frames
        self.shape_encoder = PointCloudEncoder(2, d_token, sa1, sa2, global_mlp)
        self.motion_net = MotionNet(n_frames - 1, d_token, motion_channels)
        self.attention = MotionShapeAttention(d_token, n_frames, attn_heads,
                                              attn_layers, attn_ff)
        self.head = RegressionHead(d_token, head_hidden)
        self.query_token = nn.Parameter(torch.zeros(d_token))

    def shape_tokens(self, points: torch.Tensor) -> torch.Tensor:
        """(B, T, K, 5) -> (B, T, d) through the shared per-frame encoder."""
        b, t, k, c = points.shape
        return self.shape_encoder(points.reshape(b * t, k, c)).reshape(b, t, -1)

    def forward(self, points: torch.Tensor, diff: torch.Tensor | None,
                use_motion: bool = True, with_flow: bool = False):
        """Returns (params, shape_tokens, flow-or-None)."""
        tokens = self.shape_tokens(points)
        flow = None
        if use_motion:
            z_m, flow = self.motion_net(diff, with_flow)
        else:
            z_m = self.query_token[None].expand(tokens.shape[0], -1)
        seq = torch.cat([z_m[:, None], tokens], dim=1)
        fused = self.attention(seq)
        return self.head(fused), tokens, flow


class Teacher(nn.Module):
    """Point encoder + regression head trained on dense full-surface clouds."""

    def __init__(self, d_token: int = 256,
                 sa1=(128, 0.25, 32, (64, 64, 128)),
                 sa2=(32, 0.7, 32, (128, 128, 256)),
                 global_mlp=(256, 512), head_hidden: int = 512):
        super().__init__()
        self.encoder = PointCloudEncoder(0, d_token, sa1, sa2, global_mlp)
        self.head = RegressionHead(d_token, head_hidden)
        self.trained = False

    def forward(self, points: torch.Tensor):
        """(B, N, 3) -> (tokens (B, d), ParamTensors)."""
        tokens = self.encoder(points)
        return tokens, self.head(tokens)


def teacher_forward(dense_points: np.ndarray, teacher: Teacher,
                    require_trained: bool = True):
    """Run the frozen teacher on one dense cloud -> (ShapeToken, BodyParams)."""
    if require_trained and not teacher.trained:
        raise PipelineOrderError("teacher must be trained before distillation")
    teacher.eval()
    with torch.no_grad():
        pts = torch.as_tensor(np.asarray(dense_points, dtype=np.float32))[None]
        token, params = teacher(pts)
    return ShapeToken(token[0].numpy()), params_to_numpy(params)
