"""Full-pipeline evaluation over a dataset split."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import torch

from ..body import BodyParams, Mesh, forward, select_template
from ..metrics import EvalReport, evaluate_frame
from ..mmr.heads import params_to_numpy
from ..mmr.presets import model_preset
from ..scene_sim.dataset import SplitReader
from .checkpoints import load_hre_checkpoint, load_mmr_checkpoint
from .training import Stage2Data


def evaluate_split(data_root, split: str, hre_ckpt, mmr_ckpt,
                   include_root: bool = True) -> EvalReport:
    """Run stage 1 + stage 2 on every sequence of a split; metric the results."""
    regressor, mmr_meta = load_mmr_checkpoint(mmr_ckpt)
    hre_off = mmr_meta.get("input_kind") == "cfar"
    localizer = segmenter = None
    if not hre_off:
        localizer, segmenter, _ = load_hre_checkpoint(hre_ckpt)
    cfg = model_preset(mmr_meta["model"])
    reader = SplitReader(Path(data_root) / split)
    data = Stage2Data(reader, range(len(reader)), localizer, segmenter, None,
                      cfg.k_points, hre_off, need_teacher=False)
    motion_on = not mmr_meta["config"].get("motion_off", False)

    regressor.eval()
    with torch.no_grad():
        pred, _, _ = regressor(data.points, data.diff if motion_on else None,
                               use_motion=motion_on, with_flow=False)

    rows = []
    for b in range(len(data)):
        pred_params = params_to_numpy(pred, b)
        pred_mesh = forward(select_template(pred_params.g), pred_params)
        gt_params = BodyParams(data.gt.alpha[b].numpy(), data.gt.beta[b].numpy(),
                               data.gt.tau[b].numpy(), data.gt.theta[b].numpy(),
                               float(data.gt.g[b]))
        gt_mesh = Mesh(data.vertices[b].astype(np.float64),
                       data.joints[b].astype(np.float64))
        row = evaluate_frame(pred_params, gt_params, pred_mesh, gt_mesh,
                             include_root=include_root)
        row["sequence"] = b
        rows.append(row)
    return EvalReport.from_rows(rows)


def write_report(report: EvalReport, out_dir, per_frame: bool = True,
                 figures: bool = True, name: str = "metrics"):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{name}.json").write_text(json.dumps(report.to_dict(), indent=2))
    if per_frame and report.per_frame:
        keys = ["sequence", "mve_mm", "mje_mm", "mre_deg", "te_mm"]
        with open(out_dir / f"{name}_per_frame.csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=keys, extrasaction="ignore")
            writer.writeheader()
            writer.writerows(report.per_frame)
    if figures and report.per_frame:
        from .plots import plot_eval_report
        plot_eval_report(report, out_dir / f"{name}_hist.png")
