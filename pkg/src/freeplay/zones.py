"""Colour-zone segmentation of the play surface and derived analytics.

Zones are maximal 4-connected components of equal colour class in the
composite raster (background overwritten by rasterized strokes). All
functions here are pure; the live wiring lives in analytics.py.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .clock import Timestamp
from .engine import PALETTE, RASTER_CELL
from .wire import message


class ZoneError(Exception):
    pass


class InvalidPalette(ZoneError):
    pass


class OutOfBounds(ZoneError):
    pass


@message
@dataclass(frozen=True)
class ZoneTransitionMsg:
    item_id: str
    from_zone: int
    to_zone: int
    stamp: Timestamp

    FIELDS = (
        ("item_id", "str"),
        ("from_zone", "i32"),
        ("to_zone", "i32"),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class ProximityMsg:
    item_a: str
    item_b: str
    distance_before: float
    distance_after: float
    stamp: Timestamp

    FIELDS = (
        ("item_a", "str"),
        ("item_b", "str"),
        ("distance_before", "fp"),
        ("distance_after", "fp"),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class ZoneMapMsg:
    width: int
    height: int
    labels: bytes  # row-major u16 zone ids, little-endian
    zones: list  # (zone_id, colour, cell_count, min_x, min_y, max_x, max_y)
    stamp: Timestamp

    FIELDS = (
        ("width", "u16"),
        ("height", "u16"),
        ("labels", "bytes"),
        (
            "zones",
            (
                "list",
                (
                    ("zone_id", "u16"),
                    ("colour", "u8"),
                    ("cell_count", "u32"),
                    ("min_x", "u16"),
                    ("min_y", "u16"),
                    ("max_x", "u16"),
                    ("max_y", "u16"),
                ),
            ),
        ),
        ("stamp", "i64"),
    )


@dataclass(frozen=True)
class ZoneInfo:
    zone_id: int
    colour: int
    cell_count: int
    bbox: tuple  # (min_x, min_y, max_x, max_y) cell indices, inclusive


@dataclass
class ZoneMap:
    labels: np.ndarray  # int32, shape (ny, nx)
    zones: list
    cell_m: float = RASTER_CELL

    @property
    def zone_count(self) -> int:
        return len(self.zones)

    def to_msg(self, stamp: Timestamp) -> ZoneMapMsg:
        ny, nx = self.labels.shape
        return ZoneMapMsg(
            nx,
            ny,
            self.labels.astype("<u2").tobytes(),
            [(z.zone_id, z.colour, z.cell_count, *z.bbox) for z in self.zones],
            stamp,
        )


def segment(raster: np.ndarray, palette_size: int = len(PALETTE), cell_m: float = RASTER_CELL) -> ZoneMap:
    """Label maximal 4-connected equal-colour components.

    Zone ids are assigned in row-major order of each zone's first cell.
    """
    grid = np.asarray(raster)
    if grid.size == 0:
        raise ZoneError("empty raster")
    bad = grid[(grid < 0) | (grid >= palette_size)]
    if bad.size:
        raise InvalidPalette(int(bad.flat[0]))
    ny, nx = grid.shape
    labels = np.full((ny, nx), -1, dtype=np.int32)
    zones: list[ZoneInfo] = []
    for iy in range(ny):
        for ix in range(nx):
            if labels[iy, ix] != -1:
                continue
            zone_id = len(zones)
            colour = int(grid[iy, ix])
            queue = deque([(ix, iy)])
            labels[iy, ix] = zone_id
            count = 0
            min_x = max_x = ix
            min_y = max_y = iy
            while queue:
                cx, cy = queue.popleft()
                count += 1
                min_x, max_x = min(min_x, cx), max(max_x, cx)
                min_y, max_y = min(min_y, cy), max(max_y, cy)
                for nx_, ny_ in ((cx - 1, cy), (cx + 1, cy), (cx, cy - 1), (cx, cy + 1)):
                    if 0 <= nx_ < nx and 0 <= ny_ < ny and labels[ny_, nx_] == -1 \
                            and grid[ny_, nx_] == colour:
                        labels[ny_, nx_] = zone_id
                        queue.append((nx_, ny_))
            zones.append(ZoneInfo(zone_id, colour, count, (min_x, min_y, max_x, max_y)))
    return ZoneMap(labels, zones, cell_m)


def zone_of(zmap: ZoneMap, x: float, y: float) -> int:
    """Zone id of the cell containing (x, y), floor(x / cell) convention."""
    ny, nx = zmap.labels.shape
    if not (0.0 <= x <= nx * zmap.cell_m and 0.0 <= y <= ny * zmap.cell_m):
        raise OutOfBounds(f"({x}, {y}) outside the mapped area")
    ix = min(int(math.floor(x / zmap.cell_m)), nx - 1)
    iy = min(int(math.floor(y / zmap.cell_m)), ny - 1)
    return int(zmap.labels[iy, ix])


def detect_transition(
    zmap: ZoneMap,
    item_id: str,
    before: tuple[float, float],
    after: tuple[float, float],
    stamp: Timestamp,
) -> ZoneTransitionMsg | None:
    """Zone transition for a completed drag, or None if the zone is unchanged."""
    z0 = zone_of(zmap, *before)
    z1 = zone_of(zmap, *after)
    if z0 == z1:
        return None
    return ZoneTransitionMsg(item_id, z0, z1, stamp)


DEFAULT_PROXIMITY_THRESHOLD = 0.05


def detect_proximity(
    before: dict,
    after: dict,
    threshold: float = DEFAULT_PROXIMITY_THRESHOLD,
    stamp: Timestamp = 0,
) -> list[ProximityMsg]:
    """Pairs whose centre distance shrank by more than `threshold` metres.

    `before` and `after` map item id -> (x, y); one event per unordered
    pair, ids in sorted order.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    ids = sorted(set(before) & set(after))
    events = []
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            d0 = math.dist(before[a], before[b])
            d1 = math.dist(after[a], after[b])
            if d1 < d0 - threshold:
                events.append(ProximityMsg(a, b, d0, d1, stamp))
    return events
