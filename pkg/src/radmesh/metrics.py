"""World-frame evaluation metrics: MVE, MJE, MRE, TE (no alignment applied)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .body import Mesh, axis_angle_to_matrix
from .errors import ContractViolationError

MM = 1000.0


@dataclass
class EvalReport:
    """Aggregated metrics (unweighted means over frames) plus per-frame rows."""

    mve: float
    mje: float
    mre: float
    te: float
    n_frames: int
    per_frame: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"mve_mm": self.mve, "mje_mm": self.mje, "mre_deg": self.mre,
                "te_mm": self.te, "n_frames": self.n_frames}

    @classmethod
    def from_rows(cls, rows: list[dict]) -> "EvalReport":
        if not rows:
            raise ContractViolationError("cannot aggregate an empty report")
        mean = lambda key: float(np.mean([r[key] for r in rows]))
        return cls(mean("mve_mm"), mean("mje_mm"), mean("mre_deg"),
                   mean("te_mm"), len(rows), rows)


def mve(pred: Mesh, gt: Mesh) -> float:
    """Mean per-vertex Euclidean distance in millimeters."""
    if pred.vertices.shape != gt.vertices.shape:
        raise ContractViolationError("vertex counts must match")
    return float(np.linalg.norm(pred.vertices - gt.vertices, axis=1).mean() * MM)


def mje(pred_joints, gt_joints) -> float:
    """Mean per-joint Euclidean distance in millimeters (22 joints)."""
    pred_joints = np.asarray(pred_joints, dtype=np.float64)
    gt_joints = np.asarray(gt_joints, dtype=np.float64)
    if pred_joints.shape != gt_joints.shape or pred_joints.shape[-1] != 3:
        raise ContractViolationError("joint arrays must be matching (J, 3)")
    return float(np.linalg.norm(pred_joints - gt_joints, axis=-1).mean() * MM)


def _joint_rotations(alpha, theta, include_root: bool):
    """Per-joint rotation matrices; the root composes alpha with theta[0]."""
    theta = np.asarray(theta, dtype=np.float64)
    mats = [axis_angle_to_matrix(row) for row in theta]
    if include_root:
        mats[0] = axis_angle_to_matrix(alpha) @ mats[0]
    return mats


def mre(pred_alpha, pred_theta, gt_alpha, gt_theta,
        include_root: bool = True) -> float:
    """Mean geodesic rotation angle over the 22 joints, in degrees."""
    pred = _joint_rotations(pred_alpha, pred_theta, include_root)
    gt = _joint_rotations(gt_alpha, gt_theta, include_root)
    if len(pred) != len(gt):
        raise ContractViolationError("rotation counts must match")
    angles = []
    for rp, rg in zip(pred, gt):
        cos = (np.trace(rp @ rg.T) - 1.0) / 2.0
        angles.append(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
    return float(np.mean(angles))


def te(pred_tau, gt_tau) -> float:
    """Root translation error in millimeters."""
    pred_tau = np.asarray(pred_tau, dtype=np.float64).reshape(3)
    gt_tau = np.asarray(gt_tau, dtype=np.float64).reshape(3)
    return float(np.linalg.norm(pred_tau - gt_tau) * MM)


def evaluate_frame(pred_params, gt_params, pred_mesh: Mesh, gt_mesh: Mesh,
                   include_root: bool = True) -> dict:
    """All four metrics for one frame as a per-frame report row."""
    return {
        "mve_mm": mve(pred_mesh, gt_mesh),
        "mje_mm": mje(pred_mesh.joints, gt_mesh.joints),
        "mre_deg": mre(pred_params.alpha, pred_params.theta,
                       gt_params.alpha, gt_params.theta, include_root),
        "te_mm": te(pred_params.tau, gt_params.tau),
    }
