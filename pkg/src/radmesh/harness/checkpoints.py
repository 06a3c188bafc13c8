"""Checkpoint bundles: model state dicts in the array container format."""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import torch

from ..errors import PipelineOrderError
from ..mmr.presets import ModelConfig, model_preset
from ..scene_sim.grid import GridSpec
from .container import read_container, write_container


def state_to_arrays(module: torch.nn.Module, prefix: str) -> dict[str, np.ndarray]:
    return {f"{prefix}.{k}": v.detach().cpu().numpy()
            for k, v in module.state_dict().items()}


def load_state_from_arrays(module: torch.nn.Module, arrays: dict, prefix: str):
    state = {}
    skip = len(prefix) + 1
    for name, arr in arrays.items():
        if name.startswith(prefix + "."):
            state[name[skip:]] = torch.as_tensor(arr.copy())
    module.load_state_dict(state)


def weights_hash(module: torch.nn.Module) -> str:
    h = hashlib.sha256()
    for k, v in sorted(module.state_dict().items()):
        h.update(k.encode())
        h.update(v.detach().cpu().numpy().tobytes())
    return h.hexdigest()[:16]


def save_hre_checkpoint(path, localizer, segmenter, meta: dict):
    arrays = {**state_to_arrays(localizer, "localizer"),
              **state_to_arrays(segmenter, "segmenter")}
    write_container(path, arrays, {"kind": "hre", **meta})


def load_hre_checkpoint(path):
    arrays, meta = read_container(path)
    if meta.get("kind") != "hre":
        raise PipelineOrderError(f"{path} is not a stage-1 checkpoint")
    cfg = model_preset(meta["model"])
    grid = GridSpec.from_dict(meta["grid"])
    localizer = cfg.build_localizer(grid)
    segmenter = cfg.build_segmenter()
    load_state_from_arrays(localizer, arrays, "localizer")
    load_state_from_arrays(segmenter, arrays, "segmenter")
    localizer.eval()
    segmenter.eval()
    return localizer, segmenter, meta


def save_teacher_checkpoint(path, teacher, meta: dict):
    write_container(path, state_to_arrays(teacher, "teacher"),
                    {"kind": "teacher", "trained": True, **meta})


def load_teacher_checkpoint(path):
    arrays, meta = read_container(path)
    if meta.get("kind") != "teacher":
        raise PipelineOrderError(f"{path} is not a teacher checkpoint")
    if not meta.get("trained", False):
        raise PipelineOrderError(f"{path} holds an untrained teacher")
    teacher = model_preset(meta["model"]).build_teacher()
    load_state_from_arrays(teacher, arrays, "teacher")
    teacher.trained = True
    teacher.eval()
    return teacher, meta


def save_mmr_checkpoint(path, regressor, meta: dict):
    write_container(path, state_to_arrays(regressor, "regressor"),
                    {"kind": "mmr", **meta})


def load_mmr_checkpoint(path):
    arrays, meta = read_container(path)
    if meta.get("kind") != "mmr":
        raise PipelineOrderError(f"{path} is not a stage-2 checkpoint")
    regressor = model_preset(meta["model"]).build_regressor()
    load_state_from_arrays(regressor, arrays, "regressor")
    regressor.eval()
    return regressor, meta


def checkpoint_bytes(path) -> bytes:
    return Path(path).read_bytes()
