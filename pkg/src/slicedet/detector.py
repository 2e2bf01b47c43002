"""Detector contract plus a synthetic scene renderer and an exact
colour-blob detector that inverts it.

The renderer paints axis-aligned rectangles in per-class colours; the
synthetic detector finds 4-connected components of each class colour and
reports their tight boxes. On scenes where same-class rectangles never
touch, detection recovers the ground truth exactly, which makes the pair an
end-to-end oracle for the sliced pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol, Sequence, runtime_checkable

import numpy as np
from scipy import ndimage

from .boxes import BoundingBox, Detection, GroundTruthBox, canonical_key
from .image import RasterImage
from .numerics import nearest_indices
from .slicing import SlicePlan

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@runtime_checkable
class Detector(Protocol):
    """Anything with ``detect(image) -> list[Detection]`` in image-local
    coordinates. Implementations that cannot be called from several threads
    at once set ``thread_safe = False``."""

    def detect(self, image: RasterImage) -> list[Detection]: ...


@dataclass(frozen=True)
class ColorClassMap:
    classes: tuple[tuple[int, tuple[int, int, int]], ...]
    background: tuple[int, int, int] = (0, 0, 0)

    def __post_init__(self):
        colors = [tuple(c) for _, c in self.classes]
        ids = [i for i, _ in self.classes]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate class ids in colour map")
        if len(set(colors)) != len(colors) or tuple(self.background) in colors:
            raise ValueError("class colours must be distinct from each other and the background")
        for c in colors + [tuple(self.background)]:
            if len(c) != 3 or not all(0 <= v <= 255 for v in c):
                raise ValueError(f"invalid RGB triple {c}")

    def color_of(self, class_id: int) -> tuple[int, int, int]:
        for i, c in self.classes:
            if i == class_id:
                return tuple(c)
        raise KeyError(f"class {class_id} not in colour map")

    @property
    def class_ids(self) -> list[int]:
        return [i for i, _ in self.classes]


DEFAULT_PALETTE = (
    (230, 25, 75), (60, 180, 75), (255, 225, 25), (0, 130, 200),
    (245, 130, 48), (145, 30, 180), (70, 240, 240), (240, 50, 230),
)


def default_color_map(num_classes: int = 6) -> ColorClassMap:
    if not 1 <= num_classes <= len(DEFAULT_PALETTE):
        raise ValueError(f"default palette has {len(DEFAULT_PALETTE)} colours")
    return ColorClassMap(tuple((i, DEFAULT_PALETTE[i]) for i in range(num_classes)))


def pixel_extent(b: BoundingBox) -> tuple[int, int, int, int]:
    """Half-open pixel rectangle [floor(x1), ceil(x2)) x [floor(y1), ceil(y2))."""
    return math.floor(b.x1), math.floor(b.y1), math.ceil(b.x2), math.ceil(b.y2)


def render_scene(width: int, height: int, rects: Sequence[tuple[BoundingBox, int]],
                 cmap: ColorClassMap) -> tuple[RasterImage, list[GroundTruthBox]]:
    """Paint rectangles over the background in list order (later ones on top)."""
    img = RasterImage.blank(width, height, cmap.background)
    px = img.pixels
    gts = []
    for box, class_id in rects:
        x1, y1, x2, y2 = pixel_extent(box)
        if x1 < 0 or y1 < 0 or x2 > width or y2 > height:
            raise ValueError(f"rect {box.as_tuple()} lies outside the {width}x{height} canvas")
        if x2 <= x1 or y2 <= y1:
            raise ValueError(f"rect {box.as_tuple()} covers no pixels")
        px[y1:y2, x1:x2] = cmap.color_of(class_id)
        gts.append(GroundTruthBox(BoundingBox(x1, y1, x2, y2), class_id))
    return img, gts


def _gap(a0, a1, b0, b1):
    # pixels strictly between two half-open intervals; negative when they overlap
    return max(b0 - a1, a0 - b1)


def validate_oracle_scene(rects: Sequence[tuple[BoundingBox, int]]) -> None:
    """Raise if any two rectangles overlap or two same-class ones touch
    along an edge (which would merge them into one component)."""
    ext = [(pixel_extent(b), c) for b, c in rects]
    for i in range(len(ext)):
        (ax1, ay1, ax2, ay2), ca = ext[i]
        for j in range(i + 1, len(ext)):
            (bx1, by1, bx2, by2), cb = ext[j]
            gx = _gap(ax1, ax2, bx1, bx2)
            gy = _gap(ay1, ay2, by1, by2)
            if gx < 0 and gy < 0:
                raise ValueError(f"rects {i} and {j} overlap")
            if ca == cb and ((gx <= 0 and gy < 0) or (gx < 0 and gy <= 0)):
                raise ValueError(f"same-class rects {i} and {j} touch")


def pack_rgb(pixels: np.ndarray) -> np.ndarray:
    p = pixels.astype(np.uint32)
    return (p[..., 0] << 16) | (p[..., 1] << 8) | p[..., 2]


def synthetic_detect(image: RasterImage, cmap: ColorClassMap,
                     min_area_scale: float = 1024.0) -> list[Detection]:
    """One detection per 4-connected blob of an exact class colour.

    The score grows with blob area, ``clip(area / min_area_scale, 0.5, 1)``,
    so it is deterministic but not constant.
    """
    packed = pack_rgb(image.pixels)
    present = set(np.unique(packed).tolist())
    out = []
    for class_id, color in cmap.classes:
        code = (color[0] << 16) | (color[1] << 8) | color[2]
        if code not in present:
            continue
        mask = packed == code
        labels, n = ndimage.label(mask, structure=FOUR_CONNECTED)
        areas = np.bincount(labels.ravel(), minlength=n + 1)
        for lab, sl in enumerate(ndimage.find_objects(labels), start=1):
            ys, xs = sl
            score = min(1.0, max(0.5, areas[lab] / min_area_scale))
            box = BoundingBox(float(xs.start), float(ys.start), float(xs.stop), float(ys.stop))
            out.append(Detection(box, class_id, float(score)))
    out.sort(key=canonical_key)
    return out


class SyntheticDetector:
    """``Detector`` wrapper around :func:`synthetic_detect`."""

    thread_safe = True

    def __init__(self, cmap: ColorClassMap, min_area_scale: float = 1024.0):
        self.cmap = cmap
        self.min_area_scale = min_area_scale

    def detect(self, image: RasterImage) -> list[Detection]:
        return synthetic_detect(image, self.cmap, self.min_area_scale)


def resize_image(image: RasterImage, width: int, height: int) -> RasterImage:
    rows = nearest_indices(image.height, height)
    cols = nearest_indices(image.width, width)
    return RasterImage(image.pixels[rows[:, None], cols[None, :]].copy())


def fit_within(width: int, height: int, max_size: int) -> tuple[int, int]:
    """Aspect-preserving size whose longer side is at most ``max_size``."""
    s = max(width, height)
    if s <= max_size:
        return width, height
    return max(1, round(width * max_size / s)), max(1, round(height * max_size / s))


class DownscalingDetector:
    """Models a fixed-input-size detector: the image is shrunk (nearest
    neighbour, aspect kept) to fit ``max_size`` before the inner detector
    runs, and boxes are scaled back up afterwards."""

    def __init__(self, inner: Detector, max_size: int = 640):
        self.inner = inner
        self.max_size = max_size
        self.thread_safe = getattr(inner, "thread_safe", True)

    def detect(self, image: RasterImage) -> list[Detection]:
        w, h = fit_within(image.width, image.height, self.max_size)
        if (w, h) == (image.width, image.height):
            return self.inner.detect(image)
        sx, sy = image.width / w, image.height / h
        dets = self.inner.detect(resize_image(image, w, h))
        out = []
        for d in dets:
            b = d.box.scale(sx, sy)
            b = BoundingBox(b.x1, b.y1, min(b.x2, image.width), min(b.y2, image.height))
            out.append(Detection(b, d.class_id, d.score))
        out.sort(key=canonical_key)
        return out


def tile_edge_lines(plan: SlicePlan) -> tuple[set[int], set[int]]:
    """Interior x and y coordinates where some tile starts or ends."""
    xs, ys = set(), set()
    for t in plan.tiles:
        xs.update((t.origin_x, t.x2))
        ys.update((t.origin_y, t.y2))
    xs -= {0, plan.image_width}
    ys -= {0, plan.image_height}
    return xs, ys


def _crosses(lo, hi, lines):
    return any(lo < v < hi for v in lines)


def overlap_strips(origins: Sequence[int], tile: int) -> list[tuple[int, int]]:
    """Half-open intervals shared by consecutive tiles on one axis."""
    return [(origins[i + 1], origins[i] + tile)
            for i in range(len(origins) - 1) if origins[i] + tile > origins[i + 1]]


def random_scene(seed: int, width: int, height: int, num_objects: int,
                 num_classes: int = 6, plan: SlicePlan | None = None,
                 min_straddling: int = 0, size_range: tuple[int, int] = (12, 48),
                 gap: int = 2, max_tries: int = 200_000) -> list[tuple[BoundingBox, int]]:
    """Seeded oracle-grade layout of integer rectangles.

    Rectangles never overlap and keep ``gap`` pixels from each other. When a
    ``plan`` is given, no rectangle is cut by a tile edge, and at least
    ``min_straddling`` of them sit inside the overlap band between two
    neighbouring tiles (so they are seen whole by more than one tile).
    """
    rng = np.random.default_rng(seed)
    lo, hi = size_range
    placed: list[tuple[int, int, int, int]] = []
    rects: list[tuple[BoundingBox, int]] = []
    if plan is not None:
        xlines, ylines = tile_edge_lines(plan)
        rows, cols = plan.shape
        xo = [plan.tiles[c].origin_x for c in range(cols)]
        yo = [plan.tiles[r * cols].origin_y for r in range(rows)]
        strips = ([("x", s) for s in overlap_strips(xo, plan.tile_size)]
                  + [("y", s) for s in overlap_strips(yo, plan.tile_size)])
    else:
        xlines = ylines = set()
        strips = []
    if min_straddling and not strips:
        raise ValueError("plan has no overlap bands to place straddling objects in")

    def free(x1, y1, x2, y2):
        for a in placed:
            if _gap(a[0], a[2], x1, x2) < gap and _gap(a[1], a[3], y1, y2) < gap:
                return False
        return not (_crosses(x1, x2, xlines) or _crosses(y1, y2, ylines))

    tries = 0
    while len(rects) < num_objects:
        tries += 1
        if tries > max_tries:
            raise RuntimeError(f"could only place {len(rects)} of {num_objects} rectangles")
        w = int(rng.integers(lo, hi + 1))
        h = int(rng.integers(lo, hi + 1))
        if len(rects) < min_straddling:
            axis, (s0, s1) = strips[int(rng.integers(len(strips)))]
            if axis == "x":
                if s1 - s0 < w:
                    continue
                x1 = int(rng.integers(s0, s1 - w + 1))
                y1 = int(rng.integers(0, height - h + 1))
            else:
                if s1 - s0 < h:
                    continue
                x1 = int(rng.integers(0, width - w + 1))
                y1 = int(rng.integers(s0, s1 - h + 1))
        else:
            if w > width or h > height:
                continue
            x1 = int(rng.integers(0, width - w + 1))
            y1 = int(rng.integers(0, height - h + 1))
        x2, y2 = x1 + w, y1 + h
        if not free(x1, y1, x2, y2):
            continue
        placed.append((x1, y1, x2, y2))
        rects.append((BoundingBox(x1, y1, x2, y2), int(rng.integers(num_classes))))
    return rects


def tiles_containing(box: BoundingBox, plan: SlicePlan) -> int:
    """Number of tiles that contain ``box`` entirely."""
    return sum(1 for t in plan.tiles
               if t.origin_x <= box.x1 and box.x2 <= t.x2
               and t.origin_y <= box.y1 and box.y2 <= t.y2)
