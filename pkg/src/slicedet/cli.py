"""Command-line entry point.

Exit status is 0 on success, 2 on usage errors and 1 on runtime or format
errors; failures also print a one-line JSON object to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .detector import SyntheticDetector, default_color_map, random_scene, render_scene
from .losses import FocalConfig, loss_table
from .metrics import COCO_THRESHOLDS, evaluate, latency_stats
from .nms import NmsConfig
from .pipeline import PipelineConfig, run
from .slicing import compute_slice_plan


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n")


def _pipeline_config(args) -> PipelineConfig:
    nms = NmsConfig(iou_threshold=args.nms_iou, class_aware=not args.class_agnostic,
                    score_threshold=args.score_thresh)
    return PipelineConfig(tile_size=args.tile, overlap_ratio=args.overlap, nms=nms,
                          workers=args.workers, mode=args.mode,
                          full_image_pass=args.full_image_pass,
                          direct_downscale=args.downscale)


def cmd_slice_plan(args):
    plan = compute_slice_plan(args.width, args.height, args.tile, args.overlap)
    sys.stdout.write(io.dumps(io.plan_to_dict(plan)))


def cmd_demo(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cmap = default_color_map(args.num_classes)
    plan = compute_slice_plan(args.width, args.height, args.tile, args.overlap)
    straddling = args.objects // 6 if args.straddling is None else args.straddling
    if len(plan.tiles) == 1:
        straddling = 0
    rects = random_scene(args.seed, args.width, args.height, args.objects, args.num_classes,
                         plan=plan, min_straddling=straddling)
    image, gts = render_scene(args.width, args.height, rects, cmap)
    io.write_ppm(image, out / "scene.ppm")
    io.write_json(io.annotation_to_dict("scene.ppm", image.width, image.height, gts),
                  out / "scene.json")
    io.write_json(io.cmap_to_dict(cmap), out / "classes.json")
    sys.stdout.write(io.dumps({"image": str(out / "scene.ppm"), "truth": str(out / "scene.json"),
                               "classes": str(out / "classes.json"), "objects": len(gts)}))


def cmd_detect(args):
    image = io.read_ppm(args.image)
    cmap = io.read_cmap(args.classes)
    cfg = _pipeline_config(args)
    result = run(image, SyntheticDetector(cmap), cfg)
    meta = {"mode": cfg.mode, "tile_size": cfg.tile_size, "overlap": cfg.overlap_ratio,
            "nms_iou": cfg.nms.iou_threshold}
    doc = io.detections_to_dict(Path(args.image).name, image.width, image.height,
                                result.detections, meta)
    io.write_json(doc, args.out)
    if args.timing:
        io.write_json({"latency_ms": result.latency_ms, "tile_ms": result.tile_ms}, args.timing)


def cmd_eval(args):
    _, dets, _ = io.read_detections(args.detections)
    _, gts = io.read_annotations(args.truth)
    thresholds = COCO_THRESHOLDS if args.coco_range else (args.iou,)
    timings = None
    if args.timing:
        timings = [io.read_json(args.timing)["latency_ms"]]
    report = evaluate([(dets, gts)], thresholds, include_absent_classes=args.strict,
                      timings_ms=timings)
    text = io.dumps(io.report_to_dict(report))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_bench(args):
    if args.repeat < 1:
        raise UsageError("--repeat must be at least 1")
    image = io.read_ppm(args.image)
    det = SyntheticDetector(io.read_cmap(args.classes))
    cfg = _pipeline_config(args)
    times = [run(image, det, cfg).latency_ms for _ in range(args.repeat)]
    latency, fps = latency_stats(times)
    sys.stdout.write(io.dumps({"latency_ms": latency, "fps": fps, "repeat": args.repeat,
                               "mode": cfg.mode}))


def cmd_loss_table(args):
    rows = loss_table(focal=FocalConfig(args.focal_alpha, args.gamma),
                      varifocal=FocalConfig(args.varifocal_alpha, args.gamma), q=args.q)
    sys.stdout.write(io.dumps(rows))


def _add_pipeline_args(p):
    p.add_argument("--mode", choices=("sliced", "direct"), default="sliced")
    p.add_argument("--tile", type=int, default=640)
    p.add_argument("--overlap", type=float, default=0.2)
    p.add_argument("--nms-iou", type=float, default=0.5)
    p.add_argument("--score-thresh", type=float, default=0.05)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--class-agnostic", action="store_true", help="NMS across classes")
    p.add_argument("--full-image-pass", action="store_true",
                   help="sliced mode: also detect on the whole image before merging")
    p.add_argument("--downscale", action="store_true",
                   help="direct mode: shrink the image to fit --tile first")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="slicedet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("slice-plan", help="print the tile plan as JSON")
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--tile", type=int, default=640)
    p.add_argument("--overlap", type=float, default=0.2)
    p.set_defaults(func=cmd_slice_plan)

    p = sub.add_parser("demo", help="render a seeded synthetic scene")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--objects", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--num-classes", type=int, default=6)
    p.add_argument("--tile", type=int, default=640)
    p.add_argument("--overlap", type=float, default=0.2)
    p.add_argument("--straddling", type=int, default=None,
                   help="objects placed in tile overlap bands (default objects // 6)")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("detect", help="run the synthetic detector through the pipeline")
    p.add_argument("--image", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--timing", help="also write timing JSON here")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score a detection file against annotations")
    p.add_argument("--detections", required=True)
    p.add_argument("--truth", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--iou", type=float, default=0.5)
    g.add_argument("--coco-range", action="store_true", help="mAP over IoU 0.50:0.05:0.95")
    p.add_argument("--strict", action="store_true",
                   help="count classes absent from the truth as AP 0")
    p.add_argument("--timing", help="timing JSON from detect, attaches latency/fps")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time the pipeline on one image")
    p.add_argument("--image", required=True)
    p.add_argument("--classes", required=True)
    p.add_argument("--repeat", type=int, default=5)
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("loss-table", help="print BCE/focal/varifocal values over a score grid")
    p.add_argument("--q", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=2.0)
    p.add_argument("--focal-alpha", type=float, default=0.25)
    p.add_argument("--varifocal-alpha", type=float, default=0.75)
    p.set_defaults(func=cmd_loss_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as e:
        _emit_error("usage", str(e))
        return 2
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except (OSError, ValueError, KeyError, RuntimeError) as e:
        _emit_error(type(e).__name__, str(e))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
