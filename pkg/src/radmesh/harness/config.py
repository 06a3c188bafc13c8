"""Training configuration, stage defaults, and the reference-mode toggle."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np
import torch

from ..errors import ConfigurationError

REFERENCE_ENV = "RADMESH_REFERENCE"

STAGES = ("hre", "teacher", "mmr")

_STAGE_DEFAULTS = {
    # stage: (epochs, lr_init, decay_factor, decay_every)
    "hre": (50, 1e-3, 0.5, 10),
    "teacher": (25, 2e-4, 0.5, 5),
    "mmr": (25, 2e-4, 0.5, 5),
}


@dataclass
class TrainConfig:
    """One training stage's knobs. Defaults follow the published schedules."""

    stage: str = "hre"
    epochs: int = 0          # 0 -> stage default
    lr_init: float = 0.0     # 0 -> stage default
    lr_decay_factor: float = 0.5
    lr_decay_every: int = 0  # 0 -> stage default
    batch_size: int = 32
    weight_decay: float = 1e-3
    lambda_seg: float = 1e-2
    lambda_shape: float = 10.0
    lambda_motion: float = 500.0
    motion_off: bool = False
    distill_off: bool = False
    hre_off: bool = False
    seed: int = 0
    fraction: float = 1.0
    model: str = "paper"     # model-size preset name, see mmr.presets
    flow_mask: bool = False  # mask the flow loss to occupied voxels

    def __post_init__(self):
        if self.stage not in STAGES:
            raise ConfigurationError(f"unknown stage {self.stage!r}")
        epochs, lr, decay, every = _STAGE_DEFAULTS[self.stage]
        if self.epochs == 0:
            self.epochs = epochs
        if self.lr_init == 0.0:
            self.lr_init = lr
        if self.lr_decay_every == 0:
            self.lr_decay_every = every
        if not (0.0 < self.fraction <= 1.0):
            raise ConfigurationError(f"fraction must lie in (0, 1], got {self.fraction}")
        if not (0.0 < self.lr_decay_factor <= 1.0):
            raise ConfigurationError("lr_decay_factor must lie in (0, 1]")
        if self.batch_size < 1 or self.epochs < 1:
            raise ConfigurationError("batch_size and epochs must be positive")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown TrainConfig keys: {sorted(unknown)}")
        return cls(**d)

    def content_hash(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def reference_mode_enabled() -> bool:
    return os.environ.get(REFERENCE_ENV, "0") not in ("", "0", "false", "off")


def set_reference_mode(enabled: bool = True):
    """Single-threaded deterministic execution for bit-reproducible runs."""
    os.environ[REFERENCE_ENV] = "1" if enabled else "0"
    if enabled:
        torch.set_num_threads(1)
        torch.use_deterministic_algorithms(True)
    else:
        torch.use_deterministic_algorithms(False)


def seed_everything(seed: int):
    torch.manual_seed(seed)
    np.random.seed(seed % (2 ** 32))


def apply_reference_mode_if_requested():
    if reference_mode_enabled():
        set_reference_mode(True)
