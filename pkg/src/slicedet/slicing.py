"""Overlapping tile plans for large images and tile/global coordinate maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boxes import BoundingBox
from .image import RasterImage


@dataclass(frozen=True)
class TileSpec:
    row: int
    col: int
    origin_x: int
    origin_y: int
    width: int
    height: int

    @property
    def index(self) -> tuple[int, int]:
        return (self.row, self.col)

    @property
    def x2(self) -> int:
        return self.origin_x + self.width

    @property
    def y2(self) -> int:
        return self.origin_y + self.height


@dataclass(frozen=True)
class SlicePlan:
    image_width: int
    image_height: int
    tile_size: int
    overlap_ratio: float
    tiles: tuple[TileSpec, ...]

    @property
    def stride(self) -> int:
        return tile_stride(self.tile_size, self.overlap_ratio)

    @property
    def shape(self) -> tuple[int, int]:
        """(rows, cols)"""
        return (self.tiles[-1].row + 1, self.tiles[-1].col + 1)

    def __len__(self):
        return len(self.tiles)


def tile_stride(tile_size: int, overlap_ratio: float) -> int:
    return tile_size - math.floor(overlap_ratio * tile_size)


def axis_origins(extent: int, tile_size: int, stride: int) -> list[int]:
    """Tile origins along one axis; the last one is clamped so the tile ends
    at the image edge."""
    if extent <= tile_size:
        return [0]
    last = extent - tile_size
    origins = list(range(0, last, stride))
    origins.append(last)
    return origins


def compute_slice_plan(image_width: int, image_height: int, tile_size: int = 640,
                       overlap_ratio: float = 0.2) -> SlicePlan:
    """Row-major overlapping tiling of a ``image_width x image_height`` image.

    >>> plan = compute_slice_plan(1000, 640, 640, 0.2)
    >>> [t.origin_x for t in plan.tiles]
    [0, 360]
    """
    for name, v in (("image_width", image_width), ("image_height", image_height),
                    ("tile_size", tile_size)):
        if int(v) != v or v <= 0:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")
    if not 0.0 <= overlap_ratio < 1.0:
        raise ValueError(f"overlap_ratio must lie in [0, 1), got {overlap_ratio!r}")
    image_width, image_height, tile_size = int(image_width), int(image_height), int(tile_size)
    stride = tile_stride(tile_size, overlap_ratio)

    xs = axis_origins(image_width, tile_size, stride)
    ys = axis_origins(image_height, tile_size, stride)
    tw = min(tile_size, image_width)
    th = min(tile_size, image_height)
    tiles = tuple(
        TileSpec(row=r, col=c, origin_x=x, origin_y=y, width=tw, height=th)
        for r, y in enumerate(ys)
        for c, x in enumerate(xs)
    )
    return SlicePlan(image_width, image_height, tile_size, float(overlap_ratio), tiles)


def remap_box(b: BoundingBox, tile: TileSpec, tolerance: float = 1.0) -> BoundingBox:
    """Tile-local box to the global frame.

    Boxes poking out of the tile by at most ``tolerance`` pixels are clipped
    to the tile first; anything further out is an error.
    """
    if (b.x1 < -tolerance or b.y1 < -tolerance
            or b.x2 > tile.width + tolerance or b.y2 > tile.height + tolerance):
        raise ValueError(f"box {b.as_tuple()} exceeds tile {tile.index} "
                         f"({tile.width}x{tile.height}) by more than {tolerance}px")
    if b.x1 < 0 or b.y1 < 0 or b.x2 > tile.width or b.y2 > tile.height:
        b = BoundingBox(min(max(b.x1, 0.0), tile.width), min(max(b.y1, 0.0), tile.height),
                        min(max(b.x2, 0.0), tile.width), min(max(b.y2, 0.0), tile.height))
    return b.translate(tile.origin_x, tile.origin_y)


def inverse_remap_box(b: BoundingBox, tile: TileSpec) -> BoundingBox:
    """Global box to the tile-local frame (no clipping)."""
    return b.translate(-tile.origin_x, -tile.origin_y)


def extract_tile(image: RasterImage | np.ndarray, tile: TileSpec):
    """Pixel-exact copy of the tile region.

    Accepts a ``RasterImage`` (returns one) or any ``(H, W, ...)`` array.
    """
    pixels = image.pixels if isinstance(image, RasterImage) else image
    h, w = pixels.shape[:2]
    if tile.origin_x < 0 or tile.origin_y < 0 or tile.x2 > w or tile.y2 > h:
        raise ValueError(f"tile {tile.index} at ({tile.origin_x}, {tile.origin_y}) "
                         f"size {tile.width}x{tile.height} is outside a {w}x{h} image")
    crop = pixels[tile.origin_y:tile.y2, tile.origin_x:tile.x2].copy()
    return RasterImage(crop) if isinstance(image, RasterImage) else crop
