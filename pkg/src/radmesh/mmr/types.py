"""Token and volume types flowing through stage 2."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import torch

from ..errors import ContractViolationError


@dataclass
class ShapeToken:
    """Pooled per-frame geometry embedding."""

    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float32).reshape(-1)
        if not np.isfinite(self.vector).all():
            raise ContractViolationError("shape token must be finite")


@dataclass
class MotionToken:
    """Pooled window-dynamics embedding (same width as shape tokens)."""

    vector: np.ndarray

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float32).reshape(-1)
        if not np.isfinite(self.vector).all():
            raise ContractViolationError("motion token must be finite")


class ParamTensors(NamedTuple):
    """Batched body parameters as torch tensors (training-side view)."""

    alpha: torch.Tensor  # (B, 3)
    beta: torch.Tensor   # (B, 10)
    tau: torch.Tensor    # (B, 3)
    theta: torch.Tensor  # (B, 22, 3)
    g: torch.Tensor      # (B,)

    @classmethod
    def from_params(cls, params_list, dtype=torch.float32) -> "ParamTensors":
        import numpy as _np
        stack = lambda key: torch.as_tensor(
            _np.stack([getattr(p, key) for p in params_list]), dtype=dtype)
        g = torch.as_tensor(_np.array([p.g for p in params_list]), dtype=dtype)
        return cls(stack("alpha"), stack("beta"), stack("tau"), stack("theta"), g)
