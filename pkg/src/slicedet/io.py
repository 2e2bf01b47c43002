"""File formats: binary PPM images, the JSON annotation/detection/plan/report
documents, colour maps, and a flat binary tensor format.

All JSON is written canonically (sorted keys, shortest round-trip floats,
trailing newline) so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
import math
import struct
from pathlib import Path

import numpy as np

from .boxes import BoundingBox, Detection, GroundTruthBox
from .detector import ColorClassMap
from .image import RasterImage
from .metrics import EvalReport
from .slicing import SlicePlan, TileSpec


class FormatError(ValueError):
    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)
        self.offset = offset


# -- JSON -------------------------------------------------------------------

def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(obj, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: invalid JSON: {e.msg}", e.pos) from e


# -- PPM --------------------------------------------------------------------

def _ppm_token(data: bytes, pos: int) -> tuple[bytes, int]:
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("truncated PPM header", start)
    return data[start:pos], pos


def decode_ppm(data: bytes) -> RasterImage:
    if data[:2] != b"P6":
        raise FormatError(f"not a binary PPM (magic {data[:2]!r}, expected b'P6')", 0)
    pos = 2
    fields = []
    for name in ("width", "height", "maxval"):
        start = pos
        tok, pos = _ppm_token(data, pos)
        if not tok.isdigit():
            raise FormatError(f"bad PPM {name} {tok!r}", start)
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"PPM size {width}x{height} is empty", pos)
    if maxval != 255:
        raise FormatError(f"unsupported PPM maxval {maxval}", pos)
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("missing whitespace after PPM header", pos)
    pos += 1
    need = width * height * 3
    body = data[pos:pos + need]
    if len(body) < need:
        raise FormatError(f"truncated PPM pixel data: {len(body)} of {need} bytes", pos + len(body))
    px = np.frombuffer(body, dtype=np.uint8).reshape(height, width, 3).copy()
    return RasterImage(px)


def encode_ppm(image: RasterImage) -> bytes:
    return b"P6\n%d %d\n255\n" % (image.width, image.height) + image.tobytes()


def read_ppm(path) -> RasterImage:
    return decode_ppm(Path(path).read_bytes())


def write_ppm(image: RasterImage, path) -> None:
    Path(path).write_bytes(encode_ppm(image))


# -- boxes, annotations, detections ------------------------------------------

def _bbox(values, where: str) -> BoundingBox:
    if not isinstance(values, list) or len(values) != 4:
        raise FormatError(f"{where}: bbox must be a list of four numbers")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)
               for v in values):
        raise FormatError(f"{where}: bbox values must be finite numbers")
    try:
        return BoundingBox(*(float(v) for v in values))
    except ValueError as e:
        raise FormatError(f"{where}: {e}") from e


def _bbox_list(b: BoundingBox) -> list[float]:
    return [float(v) for v in b.as_tuple()]


def _image_header(doc: dict) -> dict:
    img = doc.get("image")
    if not isinstance(img, dict) or not all(k in img for k in ("path", "width", "height")):
        raise FormatError("missing image header {path, width, height}")
    return img


def _check_inside(b: BoundingBox, img: dict, where: str):
    if b.x1 < 0 or b.y1 < 0 or b.x2 > img["width"] or b.y2 > img["height"]:
        raise FormatError(f"{where}: bbox {b.as_tuple()} outside {img['width']}x{img['height']} image")


def annotation_to_dict(image_path: str, width: int, height: int,
                       gts: list[GroundTruthBox]) -> dict:
    return {
        "image": {"path": str(image_path), "width": int(width), "height": int(height)},
        "objects": [{"class": g.class_id, "bbox": _bbox_list(g.box)} for g in gts],
    }


def annotation_from_dict(doc: dict) -> tuple[dict, list[GroundTruthBox]]:
    img = _image_header(doc)
    gts = []
    for i, obj in enumerate(doc.get("objects", [])):
        where = f"objects[{i}]"
        b = _bbox(obj.get("bbox"), where)
        _check_inside(b, img, where)
        gts.append(GroundTruthBox(b, int(obj["class"])))
    return img, gts


def detections_to_dict(image_path: str, width: int, height: int, dets: list[Detection],
                       meta: dict) -> dict:
    return {
        "image": {"path": str(image_path), "width": int(width), "height": int(height)},
        "objects": [{"class": d.class_id, "bbox": _bbox_list(d.box), "score": float(d.score)}
                    for d in dets],
        "meta": meta,
    }


def detections_from_dict(doc: dict) -> tuple[dict, list[Detection], dict]:
    img = _image_header(doc)
    dets = []
    for i, obj in enumerate(doc.get("objects", [])):
        where = f"objects[{i}]"
        b = _bbox(obj.get("bbox"), where)
        _check_inside(b, img, where)
        score = obj.get("score")
        if not isinstance(score, (int, float)) or not 0.0 <= score <= 1.0:
            raise FormatError(f"{where}: score must be a number in [0, 1]")
        dets.append(Detection(b, int(obj["class"]), float(score)))
    return img, dets, doc.get("meta", {})


def read_annotations(path):
    return annotation_from_dict(read_json(path))


def read_detections(path):
    return detections_from_dict(read_json(path))


# -- slice plans, colour maps, reports ----------------------------------------

def plan_to_dict(plan: SlicePlan) -> dict:
    return {
        "image_width": plan.image_width,
        "image_height": plan.image_height,
        "tile_size": plan.tile_size,
        "overlap_ratio": plan.overlap_ratio,
        "stride": plan.stride,
        "tiles": [{"row": t.row, "col": t.col, "x": t.origin_x, "y": t.origin_y,
                   "width": t.width, "height": t.height} for t in plan.tiles],
    }


def plan_from_dict(d: dict) -> SlicePlan:
    tiles = tuple(TileSpec(t["row"], t["col"], t["x"], t["y"], t["width"], t["height"])
                  for t in d["tiles"])
    return SlicePlan(d["image_width"], d["image_height"], d["tile_size"],
                     float(d["overlap_ratio"]), tiles)


def cmap_to_dict(cmap: ColorClassMap) -> dict:
    return {
        "background": list(cmap.background),
        "classes": [{"id": i, "color": list(c)} for i, c in cmap.classes],
    }


def cmap_from_dict(d: dict) -> ColorClassMap:
    try:
        classes = tuple((int(c["id"]), tuple(int(v) for v in c["color"])) for c in d["classes"])
        return ColorClassMap(classes, tuple(int(v) for v in d.get("background", (0, 0, 0))))
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"invalid colour map: {e}") from e


def read_cmap(path) -> ColorClassMap:
    return cmap_from_dict(read_json(path))


def report_to_dict(report: EvalReport) -> dict:
    return report.to_dict()


def report_from_dict(d: dict) -> EvalReport:
    return EvalReport.from_dict(d)


# -- tensors ----------------------------------------------------------------

TENSOR_MAGIC = b"T3"
_TENSOR_HEADER = struct.Struct("<2sIII")


def encode_tensor(x) -> bytes:
    """``b"T3"``, little-endian u32 C, H, W, then C*H*W float64 LE values."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"expected a (C, H, W) tensor, got shape {x.shape}")
    return _TENSOR_HEADER.pack(TENSOR_MAGIC, *x.shape) + x.astype("<f8").tobytes()


def decode_tensor(data: bytes) -> np.ndarray:
    if len(data) < _TENSOR_HEADER.size:
        raise FormatError("truncated tensor header", len(data))
    magic, c, h, w = _TENSOR_HEADER.unpack_from(data)
    if magic != TENSOR_MAGIC:
        raise FormatError(f"bad tensor magic {magic!r}", 0)
    need = c * h * w * 8
    body = data[_TENSOR_HEADER.size:]
    if len(body) != need:
        raise FormatError(f"tensor body has {len(body)} bytes, expected {need}", _TENSOR_HEADER.size)
    return np.frombuffer(body, dtype="<f8").reshape(c, h, w).astype(np.float64)


def write_tensor(x, path) -> None:
    Path(path).write_bytes(encode_tensor(x))


def read_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())
