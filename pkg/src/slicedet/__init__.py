"""Slicing-aided object detection inference and evaluation for very large
images, with reference kernels for channel attention, adaptive feature
fusion and focal-family losses."""

from .boxes import BoundingBox, Detection, GroundTruthBox, box_area, giou, iou
from .detector import (
    ColorClassMap,
    Detector,
    DownscalingDetector,
    SyntheticDetector,
    default_color_map,
    random_scene,
    render_scene,
    synthetic_detect,
)
from .image import RasterImage
from .metrics import (
    COCO_THRESHOLDS,
    EvalReport,
    average_precision,
    evaluate,
    latency_stats,
    map_50_95,
    match_detections,
    mean_average_precision,
)
from .nms import NmsConfig, greedy_nms, merge_tile_detections
from .pipeline import PipelineConfig, RunResult, evaluate_run, run_direct, run_sliced
from .slicing import SlicePlan, TileSpec, compute_slice_plan, extract_tile, remap_box

__version__ = "0.1.0"
