"""Stage-2 losses: distillation, scene flow, parameter/joint supervision."""

from __future__ import annotations

import numpy as np
import torch

from ..body import TemplateBody, lbs_forward
from ..errors import ContractViolationError
from .types import ParamTensors

LAMBDA_SHAPE = 10.0
LAMBDA_MOTION = 500.0
W_JOINT = 1.0
W_GENDER = 0.1
G_CLAMP = 1e-7


def _as_tensor(x):
    return x if torch.is_tensor(x) else torch.as_tensor(np.asarray(x, dtype=np.float64))


def shape_distill_loss(student_tokens, teacher_tokens):
    """Mean over frames of the squared L2 gap to the (detached) teacher."""
    s = _as_tensor(student_tokens)
    t = _as_tensor(teacher_tokens).detach().to(s.dtype)
    if s.shape != t.shape:
        raise ContractViolationError("token stacks must share shape")
    return ((s - t) ** 2).sum(dim=-1).mean()


def motion_loss(flow_hat, flow_gt, mask=None):
    """MSE over the full volume; a mask restricts it to selected voxels."""
    f = _as_tensor(flow_hat)
    g = _as_tensor(flow_gt).to(f.dtype)
    if f.shape != g.shape:
        raise ContractViolationError(
            f"flow shapes differ: {tuple(f.shape)} vs {tuple(g.shape)}")
    sq = (f - g) ** 2
    if mask is None:
        return sq.mean()
    m = _as_tensor(mask).to(f.dtype)
    return (sq * m).sum() / m.sum().clamp_min(1.0)


def smpl_loss(pred: ParamTensors, gt: ParamTensors, template: TemplateBody,
              w_joint: float = W_JOINT, w_gender: float = W_GENDER):
    """Parameter MSEs + posed-joint error + gender BCE. Returns (total, parts).

    Joints come from the body layer under the ground-truth gender's template
    (teacher forcing during training).
    """
    parts = {}
    parts["alpha"] = ((pred.alpha - gt.alpha) ** 2).mean()
    parts["beta"] = ((pred.beta - gt.beta) ** 2).mean()
    parts["tau"] = ((pred.tau - gt.tau) ** 2).mean()
    parts["theta"] = ((pred.theta - gt.theta) ** 2).mean()

    _, joints_pred = lbs_forward(template, pred.alpha, pred.beta, pred.tau, pred.theta)
    with torch.no_grad():
        _, joints_gt = lbs_forward(template, gt.alpha, gt.beta, gt.tau, gt.theta)
    parts["joint"] = ((joints_pred - joints_gt) ** 2).sum(dim=-1).mean()

    gp = pred.g.clamp(G_CLAMP, 1.0 - G_CLAMP)
    gt_g = gt.g.to(gp.dtype)
    parts["gender"] = (-(gt_g * torch.log(gp)
                         + (1.0 - gt_g) * torch.log(1.0 - gp))).mean()

    total = (parts["alpha"] + parts["beta"] + parts["tau"] + parts["theta"]
             + w_joint * parts["joint"] + w_gender * parts["gender"])
    return total, parts


def mmr_loss(smpl, shape=None, motion=None,
             lambda_shape: float = LAMBDA_SHAPE,
             lambda_motion: float = LAMBDA_MOTION):
    """Stage-2 objective: smpl + lambda_shape*shape + lambda_motion*motion.

    Ablated terms are passed as None and contribute nothing.
    """
    total = smpl
    if shape is not None:
        total = total + lambda_shape * shape
    if motion is not None:
        total = total + lambda_motion * motion
    return total
