from .cfar import cfar_extract
from .losses import LAMBDA_SEG, POS_WEIGHT, hre_loss, loc_loss, seg_loss
from .models import (
    CoarseLocalizer,
    VoxelSegmenter,
    coarse_localize,
    segment_voxels,
)
from .pipeline import OracleLocalizer, extract
from .roi import (
    ROI_DIMS,
    CoarseCenter,
    ReflectionVolume,
    RoiVolume,
    combine_view_centers,
    crop_at_origin,
    crop_roi,
    project_views,
)

__all__ = [
    "LAMBDA_SEG",
    "POS_WEIGHT",
    "ROI_DIMS",
    "CoarseCenter",
    "CoarseLocalizer",
    "OracleLocalizer",
    "ReflectionVolume",
    "RoiVolume",
    "VoxelSegmenter",
    "cfar_extract",
    "coarse_localize",
    "combine_view_centers",
    "crop_at_origin",
    "crop_roi",
    "extract",
    "hre_loss",
    "loc_loss",
    "project_views",
    "seg_loss",
    "segment_voxels",
]
