"""Stage-1 losses: center regression, weighted segmentation, and their sum."""

from __future__ import annotations

import numpy as np
import torch

from ..errors import ContractViolationError

POS_WEIGHT = 50.0
DICE_EPS = 1e-6
PROB_CLAMP = 1e-7
LAMBDA_SEG = 1e-2


def loc_loss(p_hat, p_gt):
    """Squared L2 distance between predicted and ground-truth centers (m^2)."""
    if torch.is_tensor(p_hat) or torch.is_tensor(p_gt):
        return ((torch.as_tensor(p_hat) - torch.as_tensor(p_gt)) ** 2).sum(dim=-1)
    p_hat = np.asarray(p_hat, dtype=np.float64)
    p_gt = np.asarray(p_gt, dtype=np.float64)
    return float(((p_hat - p_gt) ** 2).sum())


def seg_loss(probs, target, pos_weight: float = POS_WEIGHT, batched: bool = False):
    """Weighted BCE plus Dice. Returns (total, bce, dice).

    BCE is a mean over voxels with the positive term scaled by pos_weight;
    Dice = 1 - (2*sum(R*G)+eps)/(sum(R)+sum(G)+eps). With batched=True the
    leading axis indexes samples and Dice is averaged per sample.
    """
    was_numpy = not torch.is_tensor(probs)
    r = torch.as_tensor(probs, dtype=torch.float64 if was_numpy else None)
    g = torch.as_tensor(np.asarray(target, dtype=np.float64) if not torch.is_tensor(target)
                        else target).to(r.dtype)
    if r.shape != g.shape:
        raise ContractViolationError(f"shape mismatch {tuple(r.shape)} vs {tuple(g.shape)}")
    rc = r.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
    bce = (-(pos_weight * g * torch.log(rc) + (1.0 - g) * torch.log(1.0 - rc))).mean()
    if batched:
        dims = tuple(range(1, r.ndim))
        inter = (r * g).sum(dim=dims)
        dice = (1.0 - (2.0 * inter + DICE_EPS)
                / (r.sum(dim=dims) + g.sum(dim=dims) + DICE_EPS)).mean()
    else:
        inter = (r * g).sum()
        dice = 1.0 - (2.0 * inter + DICE_EPS) / (r.sum() + g.sum() + DICE_EPS)
    total = bce + dice
    if was_numpy:
        return float(total), float(bce), float(dice)
    return total, bce, dice


def hre_loss(loc, seg, lambda_seg: float = LAMBDA_SEG):
    """Stage-1 objective: loc + lambda_seg * seg."""
    return loc + lambda_seg * seg
