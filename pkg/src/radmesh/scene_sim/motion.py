"""Parametric action generators standing in for motion-capture sequences.

Every action is deterministic given (spec, seed) and respects the physical
plausibility bounds: per-frame joint-angle change <= 0.3 rad and per-frame
translation change <= 0.15 m.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..body import NUM_BETAS, NUM_JOINTS, BodyParams
from ..errors import ConfigurationError

ACTIONS = ("idle", "walk", "arm_raise", "squat", "turn")

L_HIP, R_HIP, L_KNEE, R_KNEE = 1, 2, 4, 5
L_SHOULDER, R_SHOULDER, L_ELBOW, R_ELBOW = 16, 17, 18, 19


@dataclass
class ActionSpec:
    """Action identity plus per-subject placement and body identity."""

    name: str = "idle"
    area: tuple = ((-0.8, 0.8), (1.1, 2.2))  # start-position bounds (x, y)
    beta: np.ndarray | None = None
    g: float = 1.0
    pelvis_z: float = 0.92
    frame_rate: float = 10.0

    def __post_init__(self):
        if self.name not in ACTIONS:
            raise ConfigurationError(f"unknown action {self.name!r} (have {ACTIONS})")
        if self.beta is None:
            self.beta = np.zeros(NUM_BETAS)
        self.beta = np.asarray(self.beta, dtype=np.float64).reshape(NUM_BETAS)


def _arms_down_pose(rng) -> np.ndarray:
    """Relaxed standing pose: arms lowered from the T-pose, slight jitter."""
    theta = np.zeros((NUM_JOINTS, 3))
    drop = 1.25 + rng.uniform(-0.08, 0.08)
    theta[L_SHOULDER, 1] = drop
    theta[R_SHOULDER, 1] = -drop
    theta[L_ELBOW, 1] = 0.15
    theta[R_ELBOW, 1] = -0.15
    theta[[3, 6, 9], 0] = rng.uniform(-0.04, 0.04, size=3)
    return theta


def _facing(direction_xy) -> float:
    """Root z-rotation turning the (alpha=0) -y facing onto direction_xy."""
    return math.atan2(direction_xy[1], direction_xy[0]) + math.pi / 2.0


def sample_motion_sequence(spec: ActionSpec, n_frames: int, seed: int) -> list[BodyParams]:
    """Generate n_frames of body parameters for the given action."""
    if n_frames < 1:
        raise ConfigurationError("n_frames must be >= 1")
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1) = spec.area
    start = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1), spec.pelvis_z])
    base_theta = _arms_down_pose(rng)
    face = rng.uniform(-math.pi, math.pi)

    frames = []
    if spec.name == "idle":
        alpha = np.array([0.0, 0.0, face])
        for _ in range(n_frames):
            frames.append(BodyParams(alpha.copy(), spec.beta.copy(), start.copy(),
                                     base_theta.copy(), spec.g))
        return frames

    if spec.name == "walk":
        speed = rng.uniform(0.4, 1.2)          # m/s
        omega = rng.uniform(0.3, 0.55)         # gait phase per frame
        phase0 = rng.uniform(0.0, 2 * math.pi)
        psi = rng.uniform(-math.pi, math.pi)
        direction = np.array([math.cos(psi), math.sin(psi), 0.0])
        # keep the endpoint inside the start area: walk toward its center if
        # the drift would exit
        drift = speed / spec.frame_rate * (n_frames - 1)
        end = start + drift * direction
        center = np.array([(x0 + x1) / 2, (y0 + y1) / 2, spec.pelvis_z])
        if not (x0 - 0.2 <= end[0] <= x1 + 0.2 and y0 - 0.2 <= end[1] <= y1 + 0.2):
            to_center = center - start
            norm = np.linalg.norm(to_center[:2])
            if norm > 1e-6:
                direction = np.array([to_center[0] / norm, to_center[1] / norm, 0.0])
        alpha = np.array([0.0, 0.0, _facing(direction[:2])])
        step = speed / spec.frame_rate
        hip_amp = rng.uniform(0.25, 0.35)
        arm_amp = rng.uniform(0.15, 0.25)
        for t in range(n_frames):
            phase = phase0 + omega * t
            theta = base_theta.copy()
            theta[L_HIP, 0] += hip_amp * math.sin(phase)
            theta[R_HIP, 0] += hip_amp * math.sin(phase + math.pi)
            theta[L_KNEE, 0] += 0.25 * max(0.0, math.sin(phase + math.pi / 2))
            theta[R_KNEE, 0] += 0.25 * max(0.0, math.sin(phase + 3 * math.pi / 2))
            theta[L_SHOULDER, 0] += arm_amp * math.sin(phase + math.pi)
            theta[R_SHOULDER, 0] += arm_amp * math.sin(phase)
            tau = start + step * t * direction
            tau = tau + np.array([0.0, 0.0, 0.01 * math.sin(2 * phase)])
            frames.append(BodyParams(alpha.copy(), spec.beta.copy(), tau,
                                     theta, spec.g))
        return frames

    if spec.name == "arm_raise":
        alpha = np.array([0.0, 0.0, face])
        total = rng.uniform(0.9, 1.2)  # shoulder travel back toward horizontal
        rate = min(0.28, total / max(n_frames - 1, 1))
        for t in range(n_frames):
            theta = base_theta.copy()
            lift = rate * t
            theta[L_SHOULDER, 1] -= lift
            theta[R_SHOULDER, 1] += lift
            frames.append(BodyParams(alpha.copy(), spec.beta.copy(), start.copy(),
                                     theta, spec.g))
        return frames

    if spec.name == "squat":
        alpha = np.array([0.0, 0.0, face])
        omega = rng.uniform(0.25, 0.4)
        phase0 = rng.uniform(0.0, 2 * math.pi)
        for t in range(n_frames):
            phase = phase0 + omega * t
            bend = 0.5 * (1.0 - math.cos(phase)) / 2.0 + 0.15
            theta = base_theta.copy()
            theta[[L_KNEE, R_KNEE], 0] += bend
            theta[[L_HIP, R_HIP], 0] -= 0.6 * bend
            tau = start + np.array([0.0, 0.0, -0.22 * bend])
            frames.append(BodyParams(alpha.copy(), spec.beta.copy(), tau,
                                     theta, spec.g))
        return frames

    # turn
    rate = rng.uniform(0.12, 0.25) * rng.choice([-1.0, 1.0])
    for t in range(n_frames):
        alpha = np.array([0.0, 0.0, face + rate * t])
        frames.append(BodyParams(alpha, spec.beta.copy(), start.copy(),
                                 base_theta.copy(), spec.g))
    return frames
