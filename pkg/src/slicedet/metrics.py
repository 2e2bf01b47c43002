"""Detection evaluation: matching, all-points AP, mAP and latency/FPS."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .boxes import Detection, GroundTruthBox, canonical_key, iou

COCO_THRESHOLDS = tuple(round(0.50 + 0.05 * i, 2) for i in range(10))


@dataclass
class MatchOutcome:
    detections: list[Detection]  # canonical (score-descending) order
    tp: list[bool]
    gt_matched: list[bool]

    @property
    def num_tp(self) -> int:
        return sum(self.tp)


def match_detections(dets: Sequence[Detection], gts: Sequence[GroundTruthBox],
                     iou_threshold: float = 0.5) -> MatchOutcome:
    """Greedy matching for one image and one class.

    Detections are visited best-first; each takes the still-unmatched ground
    truth with the highest IoU if that IoU reaches the threshold.
    """
    order = sorted(dets, key=canonical_key)
    matched = [False] * len(gts)
    tp = []
    for d in order:
        best, best_iou = -1, -1.0
        for j, g in enumerate(gts):
            if matched[j]:
                continue
            o = iou(d.box, g.box)
            if o > best_iou:
                best, best_iou = j, o
        if best >= 0 and best_iou >= iou_threshold:
            matched[best] = True
            tp.append(True)
        else:
            tp.append(False)
    return MatchOutcome(order, tp, matched)


def average_precision(flags: Sequence[bool], num_gt: int, return_defined: bool = False):
    """Area under the interpolated precision-recall curve.

    ``flags`` are TP/FP markers in descending-score order. Precision is
    replaced by its running maximum from the right (the envelope) and
    integrated over every recall step. With no ground truth the AP is 0; pass
    ``return_defined=True`` to also learn whether it was actually defined
    (False when there were neither ground truths nor detections).
    """
    if num_gt < 0:
        raise ValueError("num_gt must be non-negative")
    flags = np.asarray(flags, dtype=bool)
    if num_gt == 0:
        ap, defined = 0.0, flags.size > 0
    elif flags.size == 0:
        ap, defined = 0.0, True
    else:
        tp = np.cumsum(flags)
        fp = np.cumsum(~flags)
        recall = tp / num_gt
        precision = tp / (tp + fp)
        envelope = np.maximum.accumulate(precision[::-1])[::-1]
        steps = np.diff(np.concatenate([[0.0], recall]))
        ap = float(np.sum(steps * envelope))
        defined = True
    return (ap, defined) if return_defined else ap


def mean_average_precision(per_class_ap: Sequence[float]) -> float:
    if len(per_class_ap) == 0:
        raise ValueError("mAP of an empty class list")
    return float(sum(per_class_ap) / len(per_class_ap))


def map_50_95(evaluate: Callable[[float], float],
              thresholds: Sequence[float] = COCO_THRESHOLDS) -> float:
    """Mean of ``evaluate(t)`` over the IoU thresholds 0.50:0.05:0.95."""
    values = [evaluate(t) for t in thresholds]
    return sum(values) / len(values)


def latency_stats(per_image_ms: Sequence[float]) -> tuple[float, float]:
    """(mean latency in ms, frames per second)."""
    if len(per_image_ms) == 0:
        raise ValueError("no timings")
    if any(not t > 0 for t in per_image_ms):
        raise ValueError("timings must be positive")
    latency = float(np.mean(per_image_ms))
    return latency, 1000.0 / latency


@dataclass
class EvalReport:
    ap: dict[int, dict[float, float]]  # class -> threshold -> AP
    map_by_threshold: dict[float, float]
    map50: float | None
    map50_95: float | None
    num_detections: int
    num_ground_truths: int
    classes_without_gt: list[int] = field(default_factory=list)
    latency_ms: float | None = None
    fps: float | None = None

    def to_dict(self) -> dict:
        fmt = "{:.2f}".format
        return {
            "ap": {str(c): {fmt(t): v for t, v in per.items()} for c, per in sorted(self.ap.items())},
            "map": {fmt(t): v for t, v in self.map_by_threshold.items()},
            "map50": self.map50,
            "map50_95": self.map50_95,
            "num_detections": self.num_detections,
            "num_ground_truths": self.num_ground_truths,
            "classes_without_gt": list(self.classes_without_gt),
            "latency_ms": self.latency_ms,
            "fps": self.fps,
        }

    @classmethod
    def from_dict(cls, d: dict) -> EvalReport:
        return cls(
            ap={int(c): {float(t): v for t, v in per.items()} for c, per in d["ap"].items()},
            map_by_threshold={float(t): v for t, v in d["map"].items()},
            map50=d["map50"],
            map50_95=d["map50_95"],
            num_detections=d["num_detections"],
            num_ground_truths=d["num_ground_truths"],
            classes_without_gt=list(d["classes_without_gt"]),
            latency_ms=d["latency_ms"],
            fps=d["fps"],
        )


def _class_ap(images, class_id: int, threshold: float) -> tuple[float, int, int]:
    """Pooled AP for one class over several images: (ap, num_gt, num_det)."""
    scored = []
    num_gt = 0
    for img_idx, (dets, gts) in enumerate(images):
        cd = [d for d in dets if d.class_id == class_id]
        cg = [g for g in gts if g.class_id == class_id]
        num_gt += len(cg)
        m = match_detections(cd, cg, threshold)
        for d, flag in zip(m.detections, m.tp):
            scored.append((canonical_key(d)[:1] + (img_idx,) + canonical_key(d)[1:], flag))
    scored.sort(key=lambda e: e[0])
    flags = [f for _, f in scored]
    return average_precision(flags, num_gt), num_gt, len(flags)


def evaluate(images: Sequence[tuple[Sequence[Detection], Sequence[GroundTruthBox]]],
             thresholds: Sequence[float] = COCO_THRESHOLDS,
             include_absent_classes: bool = False,
             timings_ms: Sequence[float] | None = None) -> EvalReport:
    """Score detections against ground truth.

    ``images`` holds one ``(detections, ground_truths)`` pair per image.
    Classes without any ground truth are left out of the mAP mean unless
    ``include_absent_classes`` is set, in which case they count as AP 0.
    """
    thresholds = tuple(float(t) for t in thresholds)
    gt_classes = {g.class_id for _, gts in images for g in gts}
    det_classes = {d.class_id for dets, _ in images for d in dets}
    absent = sorted(det_classes - gt_classes)
    classes = sorted(gt_classes | (det_classes if include_absent_classes else set()))

    ap = {c: {} for c in classes}
    map_by_t = {}
    for t in thresholds:
        for c in classes:
            ap[c][t] = _class_ap(images, c, t)[0]
        map_by_t[t] = mean_average_precision([ap[c][t] for c in classes]) if classes else 0.0

    map50 = map_by_t.get(0.5)
    map50_95 = None
    if set(COCO_THRESHOLDS) <= set(thresholds):
        map50_95 = map_50_95(map_by_t.__getitem__)

    report = EvalReport(
        ap=ap,
        map_by_threshold=map_by_t,
        map50=map50,
        map50_95=map50_95,
        num_detections=sum(len(d) for d, _ in images),
        num_ground_truths=sum(len(g) for _, g in images),
        classes_without_gt=absent,
    )
    if timings_ms:
        report.latency_ms, report.fps = latency_stats(timings_ms)
    return report
