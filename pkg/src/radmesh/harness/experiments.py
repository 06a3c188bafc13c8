"""Experiment runners: component ablation grid and data-efficiency curves."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..scene_sim.dataset import SplitReader
from .config import TrainConfig
from .evaluate import evaluate_split
from .training import nested_subset, train_hre, train_mmr, train_teacher

ABLATION_CELLS = [
    {"label": "none", "motion_off": True, "distill_off": True},
    {"label": "motion", "motion_off": False, "distill_off": True},
    {"label": "distill", "motion_off": True, "distill_off": False},
    {"label": "full", "motion_off": False, "distill_off": False},
]


def dataset_content_hash(data_root) -> str:
    h = hashlib.sha256()
    for split in ("train", "val", "test"):
        manifest = Path(data_root) / split / "manifest.json"
        if manifest.exists():
            h.update(json.loads(manifest.read_text())["content_hash"].encode())
    return h.hexdigest()[:16]


def _experiment_manifest(out_dir, name, configs, data_root, seeds):
    manifest = {
        "experiment": name,
        "seeds": list(seeds),
        "dataset_hash": dataset_content_hash(data_root),
        "configs": {k: (dataclasses.asdict(v) if isinstance(v, TrainConfig) else v)
                    for k, v in configs.items()},
    }
    manifest["config_hash"] = hashlib.sha256(
        json.dumps(manifest, sort_keys=True).encode()).hexdigest()[:16]
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    (Path(out_dir) / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest


def _train_prereqs(data_root, out_dir, seed, hre_cfg, teacher_cfg, log_cb=None):
    """Stage-1 and teacher checkpoints shared by every cell of one seed."""
    hre_path = Path(out_dir) / f"hre_seed{seed}.rmt"
    teacher_path = Path(out_dir) / f"teacher_seed{seed}.rmt"
    if not hre_path.exists():
        cfg = dataclasses.replace(hre_cfg, seed=seed)
        train_hre(cfg, data_root, hre_path, log_cb=log_cb)
    if not teacher_path.exists():
        cfg = dataclasses.replace(teacher_cfg, seed=seed)
        train_teacher(cfg, data_root, teacher_path, log_cb=log_cb)
    return hre_path, teacher_path


def run_ablation(data_root, out_dir, seeds=(0, 1, 2),
                 hre_cfg: TrainConfig | None = None,
                 teacher_cfg: TrainConfig | None = None,
                 mmr_cfg: TrainConfig | None = None,
                 include_hre_off: bool = False, log_cb=None) -> dict:
    """Train the four (motion x distillation) cells per seed; report test MVE."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    hre_cfg = hre_cfg or TrainConfig(stage="hre")
    teacher_cfg = teacher_cfg or TrainConfig(stage="teacher")
    mmr_cfg = mmr_cfg or TrainConfig(stage="mmr")
    _experiment_manifest(out_dir, "ablation",
                         {"hre": hre_cfg, "teacher": teacher_cfg, "mmr": mmr_cfg},
                         data_root, seeds)

    cells = list(ABLATION_CELLS)
    if include_hre_off:
        cells = cells + [{"label": "full_no_hre", "motion_off": False,
                          "distill_off": False, "hre_off": True}]
    results: dict[str, list] = {cell["label"]: [] for cell in cells}
    reports: dict[str, list] = {cell["label"]: [] for cell in cells}
    for seed in seeds:
        hre_path, teacher_path = _train_prereqs(data_root, out_dir, seed,
                                                hre_cfg, teacher_cfg, log_cb)
        for cell in cells:
            ckpt = out_dir / f"mmr_{cell['label']}_seed{seed}.rmt"
            cfg = dataclasses.replace(
                mmr_cfg, seed=seed, motion_off=cell["motion_off"],
                distill_off=cell["distill_off"],
                hre_off=cell.get("hre_off", False))
            train_mmr(cfg, data_root, ckpt,
                      hre_ckpt=None if cfg.hre_off else hre_path,
                      teacher_ckpt=None if cfg.distill_off else teacher_path,
                      log_cb=log_cb)
            report = evaluate_split(data_root, "test", hre_path, ckpt)
            results[cell["label"]].append(report.mve)
            reports[cell["label"]].append(report.to_dict())

    table = []
    for cell in cells:
        vals = np.array(results[cell["label"]])
        table.append({
            "label": cell["label"],
            "motion_branch": not cell["motion_off"],
            "shape_distillation": not cell["distill_off"],
            "hre": not cell.get("hre_off", False),
            "mve_mean_mm": float(vals.mean()),
            "mve_std_mm": float(vals.std()),
            "per_seed": vals.tolist(),
        })
    out = {"table": table, "seeds": list(seeds), "reports": reports}
    (out_dir / "ablation.json").write_text(json.dumps(out, indent=2))
    with open(out_dir / "ablation.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=[
            "label", "motion_branch", "shape_distillation", "hre",
            "mve_mean_mm", "mve_std_mm"], extrasaction="ignore")
        writer.writeheader()
        writer.writerows(table)
    from .plots import plot_ablation
    plot_ablation(table, out_dir / "ablation.png")
    return out


def run_data_efficiency(data_root, out_dir, fractions=(0.25, 0.5, 1.0),
                        seeds=(0, 1, 2), hre_cfg: TrainConfig | None = None,
                        teacher_cfg: TrainConfig | None = None,
                        mmr_cfg: TrainConfig | None = None, log_cb=None) -> dict:
    """Retrain the full pipeline at nested dataset fractions; report metrics."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fractions = sorted(fractions)
    if any(not (0.0 < f <= 1.0) for f in fractions):
        raise ConfigurationError("fractions must lie in (0, 1]")
    hre_cfg = hre_cfg or TrainConfig(stage="hre")
    teacher_cfg = teacher_cfg or TrainConfig(stage="teacher")
    mmr_cfg = mmr_cfg or TrainConfig(stage="mmr")
    _experiment_manifest(out_dir, "data_efficiency",
                         {"hre": hre_cfg, "teacher": teacher_cfg, "mmr": mmr_cfg},
                         data_root, seeds)

    n_train = len(SplitReader(Path(data_root) / "train"))
    subset_sizes = {}
    for f in fractions:
        subset = nested_subset(n_train, f)
        if len(subset) < mmr_cfg.batch_size:
            raise ConfigurationError(
                f"fraction {f} keeps {len(subset)} sequences, below one batch")
        subset_sizes[f] = len(subset)
    # nesting check: each smaller subset is contained in the next
    for small, big in zip(fractions, fractions[1:]):
        a = set(nested_subset(n_train, small).tolist())
        b = set(nested_subset(n_train, big).tolist())
        assert a <= b

    rows = []
    for seed in seeds:
        for f in fractions:
            tag = f"f{int(round(f * 100)):03d}_seed{seed}"
            hre_path = out_dir / f"hre_{tag}.rmt"
            teacher_path = out_dir / f"teacher_{tag}.rmt"
            mmr_path = out_dir / f"mmr_{tag}.rmt"
            train_hre(dataclasses.replace(hre_cfg, seed=seed, fraction=f),
                      data_root, hre_path, log_cb=log_cb)
            train_teacher(dataclasses.replace(teacher_cfg, seed=seed, fraction=f),
                          data_root, teacher_path, log_cb=log_cb)
            train_mmr(dataclasses.replace(mmr_cfg, seed=seed, fraction=f),
                      data_root, mmr_path, hre_ckpt=hre_path,
                      teacher_ckpt=teacher_path, log_cb=log_cb)
            report = evaluate_split(data_root, "test", hre_path, mmr_path)
            rows.append({"fraction": f, "seed": seed,
                         "n_train": subset_sizes[f], **report.to_dict()})

    summary = []
    for f in fractions:
        sel = [r for r in rows if r["fraction"] == f]
        summary.append({
            "fraction": f,
            "n_train": subset_sizes[f],
            **{f"{k}_mean": float(np.mean([r[k] for r in sel]))
               for k in ("mve_mm", "mje_mm", "mre_deg", "te_mm")},
            "mve_std": float(np.std([r["mve_mm"] for r in sel])),
        })
    out = {"rows": rows, "summary": summary, "fractions": fractions,
           "seeds": list(seeds)}
    (out_dir / "data_efficiency.json").write_text(json.dumps(out, indent=2))
    with open(out_dir / "data_efficiency.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    from .plots import plot_data_efficiency
    plot_data_efficiency(summary, out_dir / "data_efficiency.png")
    return out
