"""Training loops for the three pipeline stages.

Order is teacher -> stage 1 -> stage 2; stage 2 consumes frozen stage-1
extractions and frozen teacher tokens, both precomputed once per run.
"""

from __future__ import annotations

import copy
import json
import time
from pathlib import Path

import numpy as np
import torch

from ..body import default_template, forward
from ..errors import PipelineOrderError, TrainingDivergedError
from ..hre.cfar import cfar_extract
from ..hre.losses import seg_loss
from ..hre.roi import ROI_DIMS, crop_at_origin
from ..metrics import mve as mve_metric
from ..mmr.heads import params_to_numpy
from ..mmr.losses import mmr_loss, motion_loss, shape_distill_loss, smpl_loss
from ..mmr.points import PointSet5, select_topk_points
from ..mmr.presets import model_preset
from ..mmr.types import ParamTensors
from ..scene_sim.dataset import ROI_DIMS as DATA_ROI_DIMS
from ..scene_sim.dataset import SplitReader
from ..scene_sim.flow import make_scene_flow_gt
from ..scene_sim.grid import roi_origin_for_center
from ..body import BodyParams, Mesh
from .checkpoints import (
    load_hre_checkpoint,
    load_teacher_checkpoint,
    save_hre_checkpoint,
    save_mmr_checkpoint,
    save_teacher_checkpoint,
    weights_hash,
)
from .config import TrainConfig, apply_reference_mode_if_requested, seed_everything
from .container import write_container

SUBSAMPLE_SEED = 777  # fixed so dataset fractions form nested subsets


def lr_at(config: TrainConfig, epoch: int) -> float:
    """Piecewise-constant schedule: lr_init * factor^(epoch // every)."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return config.lr_init * config.lr_decay_factor ** (epoch // config.lr_decay_every)


def nested_subset(n: int, fraction: float) -> np.ndarray:
    """First ceil(f*n) entries of a fixed permutation: subsets nest across f."""
    perm = np.random.default_rng(SUBSAMPLE_SEED).permutation(n)
    count = max(1, int(np.ceil(fraction * n)))
    return np.sort(perm[:count])


def _set_lr(optimizer, lr):
    for group in optimizer.param_groups:
        group["lr"] = lr


def _guard_finite(loss: torch.Tensor, batch_arrays: dict, out_dir):
    if torch.isfinite(loss).all():
        return
    dump = None
    if out_dir is not None:
        dump = str(Path(out_dir) / "diverged_batch.rmt")
        write_container(dump, {k: np.asarray(v.detach().cpu() if torch.is_tensor(v) else v)
                               for k, v in batch_arrays.items()},
                        {"reason": "non-finite loss"})
    raise TrainingDivergedError(f"loss became non-finite ({loss.item()!r})", dump)


def smpl_loss_by_gender(pred: ParamTensors, gt: ParamTensors, genders):
    """smpl_loss with the per-sample ground-truth gender's template."""
    genders = np.asarray(genders)
    totals, weights = [], []
    parts_acc: dict = {}
    for tag in ("male", "female"):
        idx = np.nonzero(genders == tag)[0]
        if len(idx) == 0:
            continue
        sel = torch.as_tensor(idx, dtype=torch.long)
        sub_pred = ParamTensors(*(t[sel] for t in pred))
        sub_gt = ParamTensors(*(t[sel] for t in gt))
        total, parts = smpl_loss(sub_pred, sub_gt, default_template(tag))
        totals.append(total * len(idx))
        weights.append(len(idx))
        for k, v in parts.items():
            parts_acc[k] = parts_acc.get(k, 0.0) + float(v) * len(idx)
    n = sum(weights)
    return sum(totals) / n, {k: v / n for k, v in parts_acc.items()}


# ---------------------------------------------------------------------------
# stage 1

class Stage1Data:
    """RAM-cached per-frame samples: frame, visible-center, sparse occupancy."""

    def __init__(self, reader: SplitReader, indices):
        self.grid = reader.grid
        self.frames, self.centers, self.occ = [], [], []
        for i in indices:
            arrays, _ = reader.arrays(int(i))
            t = arrays["frames"].shape[0]
            for f in range(t):
                self.frames.append(arrays["frames"][f])
                self.centers.append(arrays["gt_center"][f])
                sl = slice(arrays["occ_ptr"][f], arrays["occ_ptr"][f + 1])
                self.occ.append(arrays["occ_idx"][sl].astype(np.int64))

    def __len__(self):
        return len(self.frames)

    def roi_target(self, i: int, origin) -> np.ndarray:
        target = np.zeros(ROI_DIMS, dtype=np.float32)
        local = self.occ[i] - origin
        keep = np.all((local >= 0) & (local < np.array(ROI_DIMS)), axis=1)
        local = local[keep]
        target[local[:, 0], local[:, 1], local[:, 2]] = 1.0
        return target


def _views_batch(frames, grid_dims):
    xy = np.stack([f.max(axis=2) for f in frames])[:, None]
    yz = np.stack([f.max(axis=0) for f in frames])[:, None]
    xz = np.stack([f.max(axis=1) for f in frames])[:, None]
    to = lambda a: torch.as_tensor(a, dtype=torch.float32)
    return to(xy), to(yz), to(xz)


def _stage1_validate(data: Stage1Data, localizer, segmenter):
    """Median center error (voxels) and mean hard Dice at predicted RoIs."""
    localizer.eval()
    segmenter.eval()
    vox = np.asarray(data.grid.voxel_size)
    errors, dices = [], []
    with torch.no_grad():
        for i in range(len(data)):
            center = localizer.predict_center(data.frames[i], data.grid)
            err = np.linalg.norm((center.p_hat - data.centers[i]) / vox)
            errors.append(err)
            origin = roi_origin_for_center(data.grid, center.p_hat, ROI_DIMS)
            crop = crop_at_origin(data.frames[i], origin, ROI_DIMS)
            probs = segmenter(torch.as_tensor(crop, dtype=torch.float32)[None, None])[0]
            pred = (probs.numpy() >= 0.5).astype(np.float32)
            target = data.roi_target(i, origin)
            inter = float((pred * target).sum())
            denom = float(pred.sum() + target.sum())
            dices.append(1.0 if denom == 0 else 2.0 * inter / denom)
    return float(np.median(errors)), float(np.mean(dices))


def train_hre(config: TrainConfig, data_root, out_path, early_stop=None,
              log_cb=None) -> dict:
    apply_reference_mode_if_requested()
    seed_everything(config.seed)
    reader = SplitReader(Path(data_root) / "train")
    val_reader = SplitReader(Path(data_root) / "val")
    indices = nested_subset(len(reader), config.fraction)
    data = Stage1Data(reader, indices)
    val_data = Stage1Data(val_reader, range(len(val_reader)))
    if len(data) < config.batch_size:
        raise PipelineOrderError(
            f"training set of {len(data)} frames is below one batch")

    cfg = model_preset(config.model)
    localizer = cfg.build_localizer(reader.grid, seed=config.seed)
    segmenter = cfg.build_segmenter(seed=config.seed + 1)
    params = list(localizer.parameters()) + list(segmenter.parameters())
    optimizer = torch.optim.Adam(params, lr=config.lr_init,
                                 weight_decay=config.weight_decay)

    grid = reader.grid
    origin_w = torch.tensor(grid.origin)
    vox_w = torch.tensor(grid.voxel_size)
    dims = np.asarray(grid.dims)
    out_dir = Path(out_path).parent
    log = {"stage": "hre", "config": config.to_dict(), "epochs": []}
    best = {"dice": -1.0, "state": None, "epoch": -1}

    for epoch in range(config.epochs):
        t0 = time.time()
        _set_lr(optimizer, lr_at(config, epoch))
        rng = np.random.default_rng(config.seed * 1009 + epoch)
        order = rng.permutation(len(data))
        localizer.train()
        segmenter.train()
        epoch_losses = {"total": 0.0, "loc": 0.0, "seg": 0.0}
        n_batches = 0
        for start in range(0, len(order) - config.batch_size + 1, config.batch_size):
            batch = order[start:start + config.batch_size]
            frames = [data.frames[i] for i in batch]
            centers = np.stack([data.centers[i] for i in batch])
            # jittered ground-truth-anchored RoIs for segmentation
            crops, targets = [], []
            for i in batch:
                jitter = rng.integers(-2, 3, size=3)
                anchor = data.centers[i] + jitter * np.asarray(grid.voxel_size)
                origin = roi_origin_for_center(grid, anchor, ROI_DIMS)
                crops.append(crop_at_origin(data.frames[i], origin, ROI_DIMS))
                targets.append(data.roi_target(i, origin))

            vxy, vyz, vxz = _views_batch(frames, dims)
            pred_vox = localizer(vxy, vyz, vxz)
            pred_world = origin_w + pred_vox * vox_w
            loc = ((pred_world - torch.as_tensor(centers, dtype=torch.float32)) ** 2
                   ).sum(dim=1).mean()

            crop_t = torch.as_tensor(np.stack(crops), dtype=torch.float32)[:, None]
            probs = segmenter(crop_t)
            target_t = torch.as_tensor(np.stack(targets))
            seg_total, seg_bce, seg_dice = seg_loss(probs, target_t, batched=True)

            loss = loc + config.lambda_seg * seg_total
            _guard_finite(loss, {"frames": crop_t, "targets": target_t,
                                 "centers": centers}, out_dir)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_losses["total"] += float(loss)
            epoch_losses["loc"] += float(loc)
            epoch_losses["seg"] += float(seg_total)
            n_batches += 1

        center_err, dice = _stage1_validate(val_data, localizer, segmenter)
        row = {"epoch": epoch, "lr": lr_at(config, epoch),
               **{k: v / max(n_batches, 1) for k, v in epoch_losses.items()},
               "val_center_vox": center_err, "val_dice": dice,
               "seconds": time.time() - t0}
        log["epochs"].append(row)
        if log_cb:
            log_cb(row)
        if dice > best["dice"]:
            best = {"dice": dice, "epoch": epoch,
                    "state": (copy.deepcopy(localizer.state_dict()),
                              copy.deepcopy(segmenter.state_dict()))}
        if early_stop and dice >= early_stop.get("val_dice", np.inf) \
                and center_err <= early_stop.get("center_vox", -np.inf):
            log["stopped_early"] = epoch
            break

    if best["state"] is not None:
        localizer.load_state_dict(best["state"][0])
        segmenter.load_state_dict(best["state"][1])
    log["best_epoch"] = best["epoch"]
    log["best_val_dice"] = best["dice"]
    meta = {"model": config.model, "grid": grid.to_dict(),
            "config": config.to_dict(), "epoch": best["epoch"],
            "lambda_seg": config.lambda_seg, "val_dice": best["dice"],
            "arch_hash": config.content_hash()}
    save_hre_checkpoint(out_path, localizer, segmenter, meta)
    Path(str(out_path) + ".log.json").write_text(json.dumps(log, indent=2))
    return log


# ---------------------------------------------------------------------------
# teacher

class TeacherData:
    """Per-frame dense surface clouds with their body parameters."""

    def __init__(self, reader: SplitReader, indices):
        pts, alphas, betas, taus, thetas, gs, genders = [], [], [], [], [], [], []
        verts, joints = [], []
        for i in indices:
            arrays, meta = reader.arrays(int(i))
            t = arrays["frames"].shape[0]
            for f in range(t):
                pts.append(arrays["teacher_points"][f])
                alphas.append(arrays["alpha"][f])
                betas.append(arrays["beta"])
                taus.append(arrays["tau"][f])
                thetas.append(arrays["theta"][f])
                gs.append(float(arrays["g"][0]))
                genders.append(meta["gender_tag"])
                verts.append(arrays["vertices"][f])
                joints.append(arrays["joints"][f])
        self.points = torch.as_tensor(np.stack(pts), dtype=torch.float32)
        self.gt = ParamTensors(
            torch.as_tensor(np.stack(alphas), dtype=torch.float32),
            torch.as_tensor(np.stack(betas), dtype=torch.float32),
            torch.as_tensor(np.stack(taus), dtype=torch.float32),
            torch.as_tensor(np.stack(thetas), dtype=torch.float32),
            torch.as_tensor(np.array(gs), dtype=torch.float32))
        self.genders = np.array(genders)
        self.vertices = np.stack(verts)
        self.joints = np.stack(joints)

    def __len__(self):
        return self.points.shape[0]


def _val_mve_from_params(pred: ParamTensors, gt_vertices) -> float:
    values = []
    for b in range(pred.alpha.shape[0]):
        params = params_to_numpy(pred, b)
        from ..body import select_template
        mesh = forward(select_template(params.g), params)
        values.append(mve_metric(mesh, Mesh(gt_vertices[b].astype(np.float64),
                                            np.zeros((22, 3)))))
    return float(np.mean(values))


def train_teacher(config: TrainConfig, data_root, out_path, early_stop=None,
                  log_cb=None) -> dict:
    apply_reference_mode_if_requested()
    seed_everything(config.seed)
    reader = SplitReader(Path(data_root) / "train")
    val_reader = SplitReader(Path(data_root) / "val")
    indices = nested_subset(len(reader), config.fraction)
    data = TeacherData(reader, indices)
    val = TeacherData(val_reader, range(len(val_reader)))

    cfg = model_preset(config.model)
    teacher = cfg.build_teacher(seed=config.seed)
    optimizer = torch.optim.Adam(teacher.parameters(), lr=config.lr_init,
                                 weight_decay=config.weight_decay)
    out_dir = Path(out_path).parent
    log = {"stage": "teacher", "config": config.to_dict(), "epochs": []}
    best = {"mve": np.inf, "state": None, "epoch": -1}

    for epoch in range(config.epochs):
        t0 = time.time()
        _set_lr(optimizer, lr_at(config, epoch))
        rng = np.random.default_rng(config.seed * 1013 + epoch)
        order = rng.permutation(len(data))
        teacher.train()
        total_loss, n_batches = 0.0, 0
        for start in range(0, len(order) - config.batch_size + 1, config.batch_size):
            batch = torch.as_tensor(order[start:start + config.batch_size],
                                    dtype=torch.long)
            tokens, pred = teacher(data.points[batch])
            gt = ParamTensors(*(t[batch] for t in data.gt))
            loss, _ = smpl_loss_by_gender(pred, gt, data.genders[batch.numpy()])
            _guard_finite(loss, {"points": data.points[batch]}, out_dir)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            total_loss += float(loss)
            n_batches += 1

        teacher.eval()
        with torch.no_grad():
            _, val_pred = teacher(val.points)
        val_mve = _val_mve_from_params(val_pred, val.vertices)
        row = {"epoch": epoch, "lr": lr_at(config, epoch),
               "total": total_loss / max(n_batches, 1), "val_mve_mm": val_mve,
               "seconds": time.time() - t0}
        log["epochs"].append(row)
        if log_cb:
            log_cb(row)
        if val_mve < best["mve"]:
            best = {"mve": val_mve, "epoch": epoch,
                    "state": copy.deepcopy(teacher.state_dict())}
        if early_stop and val_mve <= early_stop.get("val_mve_mm", -np.inf):
            log["stopped_early"] = epoch
            break

    if best["state"] is not None:
        teacher.load_state_dict(best["state"])
    teacher.trained = True
    log["best_epoch"] = best["epoch"]
    log["best_val_mve_mm"] = best["mve"]
    meta = {"model": config.model, "config": config.to_dict(),
            "epoch": best["epoch"], "val_mve_mm": best["mve"]}
    save_teacher_checkpoint(out_path, teacher, meta)
    Path(str(out_path) + ".log.json").write_text(json.dumps(log, indent=2))
    return log


# ---------------------------------------------------------------------------
# stage 2

def _cfar_pointset(frame, grid, k):
    """Top-k CFAR detections as 5-feature points (likelihood pinned to 1)."""
    pts, vals = cfar_extract(frame, grid, guard=(1, 1, 1), train=(2, 2, 2), rate=2.0)
    if len(pts) == 0:
        return np.zeros((k, 5), dtype=np.float32), np.zeros(3)
    order = np.argsort(-vals, kind="stable")[:k]
    pts, vals = pts[order], vals[order]
    if len(pts) < k:
        reps = int(np.ceil(k / len(pts)))
        pts = np.tile(pts, (reps, 1))[:k]
        vals = np.tile(vals, reps)[:k]
    feat = np.concatenate([pts, vals[:, None], np.ones((k, 1))], axis=1)
    centroid = np.average(pts[:len(vals)], axis=0, weights=np.maximum(vals, 1e-9))
    return feat.astype(np.float32), centroid


class Stage2Data:
    """Frozen-extraction features per window, cached as stacked tensors."""

    def __init__(self, reader: SplitReader, indices, localizer, segmenter,
                 teacher, k_points: int, hre_off: bool = False,
                 need_teacher: bool = True):
        grid = reader.grid
        pts_all, diff_all, flow_all, ttok_all = [], [], [], []
        gt_list, genders, verts, joints = [], [], [], []
        roi = np.array(DATA_ROI_DIMS)
        for i in indices:
            arrays, meta = reader.arrays(int(i))
            frames = arrays["frames"]
            t = frames.shape[0]
            if hre_off:
                feats, origin = self._cfar_features(frames, grid, k_points)
            else:
                feats, origin = self._hre_features(frames, grid, localizer,
                                                   segmenter, k_points)
            pts_all.append(feats["points"])
            diff_all.append(feats["diff"])

            roi_grid = grid.subgrid(origin, DATA_ROI_DIMS)
            prev = Mesh(arrays["vertices"][t - 2].astype(np.float64),
                        arrays["joints"][t - 2].astype(np.float64))
            curr = Mesh(arrays["vertices"][t - 1].astype(np.float64),
                        arrays["joints"][t - 1].astype(np.float64))
            vis = arrays["visible_idx"][arrays["visible_ptr"][t - 1]:
                                        arrays["visible_ptr"][t]].astype(np.int64)
            flow = make_scene_flow_gt(prev, curr, roi_grid, visible_idx=vis)
            flow_all.append(flow.values)

            if need_teacher:
                with torch.no_grad():
                    tok, _ = teacher(torch.as_tensor(arrays["teacher_points"],
                                                     dtype=torch.float32))
                ttok_all.append(tok.numpy())

            gt_list.append(BodyParams(arrays["alpha"][t - 1], arrays["beta"],
                                      arrays["tau"][t - 1], arrays["theta"][t - 1],
                                      float(arrays["g"][0])))
            genders.append(meta["gender_tag"])
            verts.append(arrays["vertices"][t - 1])
            joints.append(arrays["joints"][t - 1])

        self.points = torch.as_tensor(np.stack(pts_all), dtype=torch.float32)
        self.diff = torch.as_tensor(np.stack(diff_all), dtype=torch.float32)
        self.flow = torch.as_tensor(np.stack(flow_all), dtype=torch.float32)
        self.teacher_tokens = (torch.as_tensor(np.stack(ttok_all), dtype=torch.float32)
                               if need_teacher else None)
        self.gt = ParamTensors.from_params(gt_list, dtype=torch.float32)
        self.genders = np.array(genders)
        self.vertices = np.stack(verts)
        self.joints = np.stack(joints)

    @staticmethod
    def _hre_features(frames, grid, localizer, segmenter, k_points):
        center = localizer.predict_center(frames[-1], grid)
        origin = roi_origin_for_center(grid, center.p_hat, DATA_ROI_DIMS)
        crops = np.stack([crop_at_origin(f, origin, DATA_ROI_DIMS) for f in frames])
        with torch.no_grad():
            probs = segmenter(torch.as_tensor(crops, dtype=torch.float32)[:, None]
                              ).numpy()
        roi_grid = grid.subgrid(origin, DATA_ROI_DIMS)
        pts = []
        for t in range(len(frames)):
            from ..hre.roi import ReflectionVolume
            vol = ReflectionVolume(np.clip(probs[t], 0.0, 1.0), origin,
                                   crops[t], grid)
            pts.append(select_topk_points(vol, k_points).points)
        diff = np.stack([probs[-1] - probs[t] for t in range(len(frames) - 1)])
        return {"points": np.stack(pts), "diff": diff.astype(np.float32)}, origin

    @staticmethod
    def _cfar_features(frames, grid, k_points):
        feats, centroids = [], []
        for f in frames:
            feat, centroid = _cfar_pointset(f, grid, k_points)
            feats.append(feat)
            centroids.append(centroid)
        origin = roi_origin_for_center(grid, centroids[-1], DATA_ROI_DIMS)
        crops = np.stack([crop_at_origin(f, origin, DATA_ROI_DIMS) for f in frames])
        diff = np.stack([crops[-1] - crops[t] for t in range(len(frames) - 1)])
        return {"points": np.stack(feats), "diff": diff.astype(np.float32)}, origin

    def __len__(self):
        return self.points.shape[0]


def _stage2_val_mve(model, data: Stage2Data, motion_on: bool) -> float:
    model.eval()
    with torch.no_grad():
        pred, _, _ = model(data.points, data.diff if motion_on else None,
                           use_motion=motion_on, with_flow=False)
    return _val_mve_from_params(pred, data.vertices)


def train_mmr(config: TrainConfig, data_root, out_path, hre_ckpt=None,
              teacher_ckpt=None, early_stop=None, log_cb=None,
              train_indices=None) -> dict:
    apply_reference_mode_if_requested()
    seed_everything(config.seed)

    localizer = segmenter = None
    if not config.hre_off:
        if hre_ckpt is None:
            raise PipelineOrderError("stage 2 requires a stage-1 checkpoint "
                                     "(or the hre_off ablation)")
        localizer, segmenter, _ = load_hre_checkpoint(hre_ckpt)
    teacher = None
    if not config.distill_off:
        if teacher_ckpt is None:
            raise PipelineOrderError("stage 2 with distillation requires a "
                                     "trained teacher checkpoint")
        teacher, _ = load_teacher_checkpoint(teacher_ckpt)

    reader = SplitReader(Path(data_root) / "train")
    val_reader = SplitReader(Path(data_root) / "val")
    if train_indices is None:
        train_indices = nested_subset(len(reader), config.fraction)
    cfg = model_preset(config.model)
    data = Stage2Data(reader, train_indices, localizer, segmenter, teacher,
                      cfg.k_points, config.hre_off,
                      need_teacher=not config.distill_off)
    val = Stage2Data(val_reader, range(len(val_reader)), localizer, segmenter,
                     None, cfg.k_points, config.hre_off, need_teacher=False)

    model = cfg.build_regressor(seed=config.seed)
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr_init,
                                 weight_decay=config.weight_decay)
    out_dir = Path(out_path).parent
    motion_on = not config.motion_off
    log = {"stage": "mmr", "config": config.to_dict(), "epochs": []}
    best = {"mve": np.inf, "state": None, "epoch": -1}

    for epoch in range(config.epochs):
        t0 = time.time()
        _set_lr(optimizer, lr_at(config, epoch))
        rng = np.random.default_rng(config.seed * 1019 + epoch)
        order = rng.permutation(len(data))
        model.train()
        sums = {"total": 0.0, "smpl": 0.0, "shape": 0.0, "motion": 0.0}
        n_batches = 0
        for start in range(0, max(len(order) - config.batch_size + 1, 1),
                           config.batch_size):
            idx = order[start:start + config.batch_size]
            if len(idx) < min(config.batch_size, len(order)):
                continue
            batch = torch.as_tensor(idx, dtype=torch.long)
            pred, tokens, flow = model(
                data.points[batch], data.diff[batch] if motion_on else None,
                use_motion=motion_on, with_flow=motion_on)
            gt = ParamTensors(*(t[batch] for t in data.gt))
            smpl_val, _ = smpl_loss_by_gender(pred, gt, data.genders[idx])
            shape_val = None
            if not config.distill_off:
                shape_val = shape_distill_loss(tokens, data.teacher_tokens[batch])
            motion_val = None
            if motion_on:
                mask = None
                if config.flow_mask:
                    mask = (data.flow[batch] != 0).to(flow.dtype)
                motion_val = motion_loss(flow, data.flow[batch], mask=mask)
            loss = mmr_loss(smpl_val, shape_val, motion_val,
                            config.lambda_shape, config.lambda_motion)
            _guard_finite(loss, {"points": data.points[batch]}, out_dir)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            sums["total"] += float(loss)
            sums["smpl"] += float(smpl_val)
            sums["shape"] += float(shape_val) if shape_val is not None else 0.0
            sums["motion"] += float(motion_val) if motion_val is not None else 0.0
            n_batches += 1

        val_mve = _stage2_val_mve(model, val, motion_on)
        row = {"epoch": epoch, "lr": lr_at(config, epoch),
               **{k: v / max(n_batches, 1) for k, v in sums.items()},
               "val_mve_mm": val_mve, "seconds": time.time() - t0}
        if early_stop and "train_mve_mm" in early_stop:
            row["train_mve_mm"] = _stage2_val_mve(model, data, motion_on)
        log["epochs"].append(row)
        if log_cb:
            log_cb(row)
        if val_mve < best["mve"]:
            best = {"mve": val_mve, "epoch": epoch,
                    "state": copy.deepcopy(model.state_dict())}
        if early_stop and row.get("train_mve_mm", np.inf) <= \
                early_stop.get("train_mve_mm", -np.inf):
            log["stopped_early"] = epoch
            best = {"mve": val_mve, "epoch": epoch,
                    "state": copy.deepcopy(model.state_dict())}
            break

    if best["state"] is not None:
        model.load_state_dict(best["state"])
    log["best_epoch"] = best["epoch"]
    log["best_val_mve_mm"] = best["mve"]
    meta = {"model": config.model, "config": config.to_dict(),
            "epoch": best["epoch"], "val_mve_mm": best["mve"],
            "input_kind": "cfar" if config.hre_off else "hre",
            "teacher_hash": weights_hash(teacher) if teacher is not None else None,
            "hre_ckpt": str(hre_ckpt) if hre_ckpt else None}
    save_mmr_checkpoint(out_path, model, meta)
    Path(str(out_path) + ".log.json").write_text(json.dumps(log, indent=2))
    return log


def train(config: TrainConfig, data_root, out_path, hre_ckpt=None,
          teacher_ckpt=None, early_stop=None, log_cb=None) -> dict:
    """Stage dispatcher enforcing the teacher -> stage-1 -> stage-2 order."""
    if config.stage == "hre":
        return train_hre(config, data_root, out_path, early_stop, log_cb)
    if config.stage == "teacher":
        return train_teacher(config, data_root, out_path, early_stop, log_cb)
    return train_mmr(config, data_root, out_path, hre_ckpt, teacher_ckpt,
                     early_stop, log_cb)
