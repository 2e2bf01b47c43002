"""Sliced inference: plan, crop, detect per tile, remap, merge.

Tile detection fans out to a thread pool; results are keyed by tile index
and merged in row-major order, so worker count and scheduling never change
the output.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .boxes import Detection, GroundTruthBox
from .detector import Detector, DownscalingDetector
from .image import RasterImage
from .metrics import COCO_THRESHOLDS, EvalReport, evaluate
from .nms import NmsConfig, greedy_nms, merge_tile_detections, remap_detections
from .slicing import SlicePlan, TileSpec, compute_slice_plan, extract_tile


class TileDetectionError(RuntimeError):
    def __init__(self, tile: TileSpec, cause: BaseException):
        super().__init__(f"detector failed on tile {tile.index} at "
                         f"({tile.origin_x}, {tile.origin_y}): {cause!r}")
        self.tile = tile


@dataclass(frozen=True)
class PipelineConfig:
    tile_size: int = 640
    overlap_ratio: float = 0.2
    nms: NmsConfig = NmsConfig(iou_threshold=0.5, class_aware=True, score_threshold=0.05)
    workers: int = 1
    mode: str = "sliced"
    # sliced mode: also run the detector on the whole image and merge it in
    full_image_pass: bool = False
    # direct mode: shrink the image to fit tile_size before detecting
    direct_downscale: bool = False
    remap_tolerance: float = 1.0

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.mode not in ("sliced", "direct"):
            raise ValueError(f"mode must be 'sliced' or 'direct', got {self.mode!r}")


@dataclass
class RunResult:
    detections: list[Detection]
    tile_ms: list[float] = field(default_factory=list)
    latency_ms: float = 0.0
    plan: SlicePlan | None = None


def _elapsed_ms(t0: int) -> float:
    # floor at the clock resolution so timings stay strictly positive
    return max(time.perf_counter_ns() - t0, 1) / 1e6


def _timed_detect(det: Detector, image: RasterImage, tile: TileSpec):
    t0 = time.perf_counter_ns()
    try:
        dets = det.detect(image)
    except Exception as exc:
        raise TileDetectionError(tile, exc) from exc
    return list(dets), _elapsed_ms(t0)


def run_sliced(image: RasterImage, det: Detector, cfg: PipelineConfig = PipelineConfig()) -> RunResult:
    t_start = time.perf_counter_ns()
    plan = compute_slice_plan(image.width, image.height, cfg.tile_size, cfg.overlap_ratio)

    def work(tile):
        return _timed_detect(det, extract_tile(image, tile), tile)

    workers = cfg.workers if getattr(det, "thread_safe", True) else 1
    if workers == 1 or len(plan.tiles) == 1:
        results = [work(t) for t in plan.tiles]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, plan.tiles))

    per_tile = [(t, dets) for t, (dets, _) in zip(plan.tiles, results)]
    tile_ms = [ms for _, ms in results]
    if cfg.full_image_pass and len(plan.tiles) > 1:
        whole = TileSpec(-1, -1, 0, 0, image.width, image.height)
        full, ms = _timed_detect(det, image, whole)
        tile_ms.append(ms)
        merged = [d for t, ds in per_tile for d in remap_detections(ds, t, cfg.remap_tolerance)]
        merged += remap_detections(full, whole, cfg.remap_tolerance)
        detections = greedy_nms(merged, cfg.nms)
    else:
        detections = merge_tile_detections(per_tile, plan, cfg.nms, cfg.remap_tolerance)
    return RunResult(detections, tile_ms, _elapsed_ms(t_start), plan)


def run_direct(image: RasterImage, det: Detector, cfg: PipelineConfig = PipelineConfig()) -> RunResult:
    """One detector call on the whole image, followed by NMS."""
    t_start = time.perf_counter_ns()
    if cfg.direct_downscale:
        det = DownscalingDetector(det, cfg.tile_size)
    whole = TileSpec(0, 0, 0, 0, image.width, image.height)
    dets, ms = _timed_detect(det, image, whole)
    dets = remap_detections(dets, whole, cfg.remap_tolerance)
    return RunResult(greedy_nms(dets, cfg.nms), [ms], _elapsed_ms(t_start))


def run(image: RasterImage, det: Detector, cfg: PipelineConfig = PipelineConfig()) -> RunResult:
    return run_sliced(image, det, cfg) if cfg.mode == "sliced" else run_direct(image, det, cfg)


def evaluate_run(result: RunResult, gts: Sequence[GroundTruthBox],
                 thresholds: Sequence[float] = COCO_THRESHOLDS, **kwargs) -> EvalReport:
    return evaluate([(result.detections, gts)], thresholds,
                    timings_ms=[result.latency_ms], **kwargs)
