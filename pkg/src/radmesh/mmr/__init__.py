from .attention import MotionShapeAttention, fuse
from .heads import (
    MeshRegressor,
    RegressionHead,
    Teacher,
    params_to_numpy,
    regress_params,
    teacher_forward,
)
from .losses import (
    LAMBDA_MOTION,
    LAMBDA_SHAPE,
    mmr_loss,
    motion_loss,
    shape_distill_loss,
    smpl_loss,
)
from .motion_net import MotionNet, difference_volume, encode_motion
from .pointnet import PointCloudEncoder, encode_shape
from .points import K_POINTS, PointSet5, select_topk_points
from .presets import ModelConfig, model_preset
from .types import MotionToken, ParamTensors, ShapeToken

__all__ = [
    "K_POINTS",
    "LAMBDA_MOTION",
    "LAMBDA_SHAPE",
    "MeshRegressor",
    "ModelConfig",
    "MotionNet",
    "MotionShapeAttention",
    "MotionToken",
    "ParamTensors",
    "PointCloudEncoder",
    "PointSet5",
    "RegressionHead",
    "ShapeToken",
    "Teacher",
    "difference_volume",
    "encode_motion",
    "encode_shape",
    "fuse",
    "mmr_loss",
    "model_preset",
    "motion_loss",
    "params_to_numpy",
    "regress_params",
    "select_topk_points",
    "shape_distill_loss",
    "smpl_loss",
    "teacher_forward",
]
