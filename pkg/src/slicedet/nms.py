"""Greedy non-maximum suppression and the cross-tile detection merger."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .boxes import Detection, canonical_key, iou
from .slicing import SlicePlan, TileSpec, remap_box


@dataclass(frozen=True)
class NmsConfig:
    iou_threshold: float = 0.5
    class_aware: bool = True
    score_threshold: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold must lie in (0, 1], got {self.iou_threshold}")
        if not 0.0 <= self.score_threshold <= 1.0:
            raise ValueError(f"score_threshold must lie in [0, 1], got {self.score_threshold}")


def greedy_nms(dets: Iterable[Detection], cfg: NmsConfig = NmsConfig()) -> list[Detection]:
    """Keep the best detection, drop later ones overlapping it by more than
    ``cfg.iou_threshold``, repeat.

    Equal scores are ordered by class id, then x1, then y1, so the output
    does not depend on input order.
    """
    order = sorted((d for d in dets if d.score >= cfg.score_threshold), key=canonical_key)
    suppressed = [False] * len(order)
    keep = []
    for i, d in enumerate(order):
        if suppressed[i]:
            continue
        keep.append(d)
        for j in range(i + 1, len(order)):
            if suppressed[j]:
                continue
            other = order[j]
            if cfg.class_aware and other.class_id != d.class_id:
                continue
            if iou(d.box, other.box) > cfg.iou_threshold:
                suppressed[j] = True
    return keep


def remap_detections(dets: Iterable[Detection], tile: TileSpec,
                     tolerance: float = 1.0) -> list[Detection]:
    return [Detection(remap_box(d.box, tile, tolerance), d.class_id, d.score) for d in dets]


def merge_tile_detections(per_tile: Sequence[tuple[TileSpec, Sequence[Detection]]],
                          plan: SlicePlan, cfg: NmsConfig = NmsConfig(),
                          tolerance: float = 1.0) -> list[Detection]:
    """Map per-tile detections to the global frame and deduplicate with NMS.

    Entries may arrive in any order; they are put back in row-major tile
    order before merging.
    """
    known = set(plan.tiles)
    seen = set()
    for tile, _ in per_tile:
        if tile not in known:
            raise ValueError(f"tile {tile} is not part of the slice plan")
        if tile.index in seen:
            raise ValueError(f"tile {tile.index} given more than once")
        seen.add(tile.index)

    merged: list[Detection] = []
    for tile, dets in sorted(per_tile, key=lambda e: e[0].index):
        merged.extend(remap_detections(dets, tile, tolerance))
    return greedy_nms(merged, cfg)
