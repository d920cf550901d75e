"""Tiling plans and mask stitching for full-image inference.

Tiles are laid on a grid with stride = size - overlap; the final row/column
is shifted inward so every tile lies fully inside the image and the grid
covers every pixel. Overlaps are resolved by uniform averaging.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .errors import BadOverlap, PlanMismatch, TooSmall


@dataclass(frozen=True)
class TilePlan:
    image_size: Tuple[int, int]
    tile: int
    overlap: int
    origins: tuple  # ((row, col), ...) row-major

    def __len__(self):
        return len(self.origins)


def _axis_positions(dim: int, tile: int, stride: int) -> List[int]:
    xs = list(range(0, dim - tile + 1, stride))
    last = dim - tile
    if xs[-1] != last:
        xs.append(last)  # shift the final tile inward instead of padding
    return xs


def make_tile_plan(image_size, tile: int, overlap: int) -> TilePlan:
    h, w = int(image_size[0]), int(image_size[1])
    tile = int(tile)
    if overlap < 0 or overlap >= tile:
        raise BadOverlap(f"overlap {overlap} must satisfy 0 <= overlap < tile {tile}")
    if tile > h or tile > w:
        raise TooSmall(f"tile {tile} exceeds image {h}x{w}")
    stride = tile - overlap
    rows = _axis_positions(h, tile, stride)
    cols = _axis_positions(w, tile, stride)
    origins = tuple((r, c) for r in rows for c in cols)
    return TilePlan(image_size=(h, w), tile=tile, overlap=overlap, origins=origins)


def split_tiles(array: np.ndarray, plan: TilePlan) -> List[np.ndarray]:
    """Crop the planned tiles out of a (H, W[, C]) array, in plan order."""
    if array.shape[: 2] != plan.image_size:
        raise PlanMismatch("array shape does not match the plan")
    t = plan.tile
    return [np.ascontiguousarray(array[r : r + t, c : c + t]) for r, c in plan.origins]


def stitch_masks(tiles: Sequence[np.ndarray], plan: TilePlan) -> np.ndarray:
    """Reassemble scalar tiles into a full map, averaging where tiles overlap.

    Where all contributing tiles agree the output must reproduce their value
    bit-exactly, so agreement is detected via running min/max and the
    division only happens where tiles actually differ.
    """
    if len(tiles) != len(plan.origins):
        raise PlanMismatch(
            f"{len(tiles)} tiles for a plan with {len(plan.origins)} origins"
        )
    h, w = plan.image_size
    t = plan.tile
    total = np.zeros((h, w), dtype=np.float64)
    count = np.zeros((h, w), dtype=np.int64)
    lo = np.full((h, w), np.inf)
    hi = np.full((h, w), -np.inf)
    for tile_arr, (r, c) in zip(tiles, plan.origins):
        tile_arr = np.asarray(tile_arr, dtype=np.float64)
        if tile_arr.shape != (t, t):
            raise PlanMismatch(f"tile shape {tile_arr.shape} differs from plan {t}x{t}")
        sl = np.s_[r : r + t, c : c + t]
        total[sl] += tile_arr
        count[sl] += 1
        np.minimum(lo[sl], tile_arr, out=lo[sl])
        np.maximum(hi[sl], tile_arr, out=hi[sl])
    if (count == 0).any():
        raise PlanMismatch("plan does not cover every pixel")
    out = np.where(lo == hi, lo, total / count)
    return out
