from .dataset import (
    ROI_DIMS,
    DatasetProfile,
    SplitReader,
    build_sequence,
    generate_dataset,
    make_subjects,
    profile,
)
from .flow import make_scene_flow_gt
from .grid import GridSpec, roi_origin_for_center, voxelize_points
from .motion import ACTIONS, ActionSpec, sample_motion_sequence
from .simulate import ClutterConfig, make_pseudo_tensor, simulate_frame
from .surface import sample_surface_points, triangle_areas
from .types import FlowVolume, LabeledSequence, OccupancyMap, RadarTensorSequence
from .visibility import hidden_point_removal

__all__ = [
    "ACTIONS",
    "ROI_DIMS",
    "ActionSpec",
    "ClutterConfig",
    "DatasetProfile",
    "FlowVolume",
    "GridSpec",
    "LabeledSequence",
    "OccupancyMap",
    "RadarTensorSequence",
    "SplitReader",
    "build_sequence",
    "generate_dataset",
    "hidden_point_removal",
    "make_pseudo_tensor",
    "make_scene_flow_gt",
    "make_subjects",
    "profile",
    "roi_origin_for_center",
    "sample_motion_sequence",
    "sample_surface_points",
    "simulate_frame",
    "triangle_areas",
    "voxelize_points",
]
