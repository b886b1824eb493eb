"""Occupancy-grid A* planning for robot-driven item moves.

The grid covers the play area; cells blocked by other items' footprints
are inflated by half the moved item's footprint (configuration-space
reduction), so the planner works on the item's centre point. Paths are
8-connected with unit/√2 step costs and no corner cutting.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .clock import Timestamp
from .engine import PLAY_H, PLAY_W, TouchEvent
from .frames import Transform2D
from .wire import message

SQRT2 = math.sqrt(2.0)

DEFAULT_RESOLUTION = 0.01

# Overlap slack: boxes merely touching a cell edge (zero area, up to float
# rounding) do not occupy it.
_CONTACT_EPS = 1e-9

# Fixed 8-neighbourhood expansion order (dx, dy, diagonal).
_DIRS = (
    (-1, -1, True), (0, -1, False), (1, -1, True),
    (-1, 0, False), (1, 0, False),
    (-1, 1, True), (0, 1, False), (1, 1, True),
)


class PlannerError(Exception):
    pass


class UnknownItem(PlannerError):
    pass


class NoPath(PlannerError):
    pass


class StartOccupied(PlannerError):
    pass


class GoalOccupied(PlannerError):
    pass


@message
@dataclass(frozen=True)
class PlanRequestMsg:
    item_id: str
    x: float
    y: float
    stamp: Timestamp

    FIELDS = (("item_id", "str"), ("x", "fp"), ("y", "fp"), ("stamp", "i64"))


@message
@dataclass(frozen=True)
class ScheduleMsg:
    item_id: str
    speed: float
    steps: list  # (stamp, pointer_x, pointer_y, touch_x, touch_y, phase)
    stamp: Timestamp

    FIELDS = (
        ("item_id", "str"),
        ("speed", "f64"),
        (
            "steps",
            (
                "list",
                (
                    ("stamp", "i64"),
                    ("px", "fp"),
                    ("py", "fp"),
                    ("tx", "fp"),
                    ("ty", "fp"),
                    ("phase", ("enum", ("down", "move", "up"))),
                ),
            ),
        ),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class PointerMsg:
    x: float
    y: float
    stamp: Timestamp

    FIELDS = (("x", "fp"), ("y", "fp"), ("stamp", "i64"))


@dataclass
class OccupancyGrid:
    resolution: float
    nx: int
    ny: int
    occupied: np.ndarray  # bool, shape (ny, nx)

    @staticmethod
    def empty(resolution: float = DEFAULT_RESOLUTION) -> "OccupancyGrid":
        nx = math.ceil(PLAY_W / resolution)
        ny = math.ceil(PLAY_H / resolution)
        return OccupancyGrid(resolution, nx, ny, np.zeros((ny, nx), dtype=bool))

    def in_bounds(self, cell: tuple[int, int]) -> bool:
        ix, iy = cell
        return 0 <= ix < self.nx and 0 <= iy < self.ny

    def is_free(self, cell: tuple[int, int]) -> bool:
        return self.in_bounds(cell) and not self.occupied[cell[1], cell[0]]

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        ix = min(int(math.floor(x / self.resolution)), self.nx - 1)
        iy = min(int(math.floor(y / self.resolution)), self.ny - 1)
        return (max(ix, 0), max(iy, 0))

    def centre(self, cell: tuple[int, int]) -> tuple[float, float]:
        return ((cell[0] + 0.5) * self.resolution, (cell[1] + 0.5) * self.resolution)

    def clear_region(self, cell: tuple[int, int]) -> None:
        """Force-clear a cell and its 8 neighbours (escape from contact states)."""
        ix, iy = cell
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                if self.in_bounds((ix + dx, iy + dy)):
                    self.occupied[iy + dy, ix + dx] = False

    def occupied_count(self) -> int:
        return int(self.occupied.sum())

    def to_pgm(self) -> str:
        """Plain (P2) portable graymap dump: occupied cells black, top row first."""
        lines = [f"P2", f"{self.nx} {self.ny}", "255"]
        for iy in range(self.ny - 1, -1, -1):
            lines.append(" ".join("0" if v else "255" for v in self.occupied[iy]))
        return "\n".join(lines) + "\n"


def build_occupancy(items, exclude: str, resolution: float = DEFAULT_RESOLUTION) -> OccupancyGrid:
    """Grid blocked by every item except `exclude`, footprints inflated by
    half of the excluded item's footprint."""
    moved = None
    for item in items:
        if item.id == exclude:
            moved = item
            break
    if moved is None:
        raise UnknownItem(exclude)
    grid = OccupancyGrid.empty(resolution)
    half_w = moved.w / 2.0
    half_h = moved.h / 2.0
    res = grid.resolution
    for item in items:
        if item.id == exclude:
            continue
        bx0 = item.pose.x - item.w / 2.0 - half_w
        bx1 = item.pose.x + item.w / 2.0 + half_w
        by0 = item.pose.y - item.h / 2.0 - half_h
        by1 = item.pose.y + item.h / 2.0 + half_h
        # strict-overlap convention: a cell is occupied iff it intersects the
        # inflated box with positive area
        ix_lo = max(0, int(math.floor(bx0 / res)) - 1)
        ix_hi = min(grid.nx - 1, int(math.floor(bx1 / res)) + 1)
        iy_lo = max(0, int(math.floor(by0 / res)) - 1)
        iy_hi = min(grid.ny - 1, int(math.floor(by1 / res)) + 1)
        for iy in range(iy_lo, iy_hi + 1):
            if not (iy * res < by1 - _CONTACT_EPS and (iy + 1) * res > by0 + _CONTACT_EPS):
                continue
            for ix in range(ix_lo, ix_hi + 1):
                if ix * res < bx1 - _CONTACT_EPS and (ix + 1) * res > bx0 + _CONTACT_EPS:
                    grid.occupied[iy, ix] = True
    return grid


@dataclass
class Path:
    cells: list  # [(ix, iy), ...] from start to goal
    cost: float  # orthogonal steps + √2 per diagonal
    n_diagonal: int
    resolution: float


def _octile(a: tuple[int, int], b: tuple[int, int]) -> float:
    dx = abs(a[0] - b[0])
    dy = abs(a[1] - b[1])
    return (dx + dy) + (SQRT2 - 2.0) * min(dx, dy)


def path_cost(cells) -> tuple[float, int]:
    """Exact cost of a cell path from its step counts."""
    n_diag = sum(
        1
        for (x0, y0), (x1, y1) in zip(cells, cells[1:])
        if x0 != x1 and y0 != y1
    )
    n_orth = len(cells) - 1 - n_diag
    return n_orth + n_diag * SQRT2, n_diag


def plan(grid: OccupancyGrid, start: tuple[int, int], goal: tuple[int, int]) -> Path:
    """Minimal-cost 8-connected path with octile heuristic.

    Deterministic: f-ties broken by lower h, then by row-major cell index.
    Diagonal steps require both orthogonal neighbours free (no corner
    cutting).
    """
    start, goal = tuple(start), tuple(goal)
    for cell in (start, goal):
        if not grid.in_bounds(cell):
            raise PlannerError(f"cell {cell} outside the grid")
    if not grid.is_free(start):
        raise StartOccupied(str(start))
    if not grid.is_free(goal):
        raise GoalOccupied(str(goal))

    nx = grid.nx
    g_best = {start: 0.0}
    parent: dict = {start: None}
    h0 = _octile(start, goal)
    open_heap = [(h0, h0, start[1] * nx + start[0], start, 0.0)]
    closed: set = set()
    while open_heap:
        _, _, _, cell, g = heapq.heappop(open_heap)
        if cell in closed or g != g_best.get(cell):
            continue
        if cell == goal:
            cells = []
            cursor = cell
            while cursor is not None:
                cells.append(cursor)
                cursor = parent[cursor]
            cells.reverse()
            cost, n_diag = path_cost(cells)
            return Path(cells, cost, n_diag, grid.resolution)
        closed.add(cell)
        cx, cy = cell
        for dx, dy, diag in _DIRS:
            nxt = (cx + dx, cy + dy)
            if not grid.is_free(nxt) or nxt in closed:
                continue
            if diag and not (grid.is_free((cx + dx, cy)) and grid.is_free((cx, cy + dy))):
                continue
            ng = g + (SQRT2 if diag else 1.0)
            if ng < g_best.get(nxt, math.inf):
                g_best[nxt] = ng
                parent[nxt] = cell
                h = _octile(nxt, goal)
                heapq.heappush(open_heap, (ng + h, h, nxt[1] * nx + nxt[0], nxt, ng))
    raise NoPath(f"goal {goal} unreachable from {start}")


@dataclass(frozen=True)
class ScheduleStep:
    stamp: Timestamp
    pointer: tuple  # (x, y) in the robot frame
    touch: TouchEvent  # fake touch in the sandtray frame


@dataclass
class MotionSchedule:
    item_id: str
    speed: float
    steps: list = field(default_factory=list)

    def to_msg(self, stamp: Timestamp) -> ScheduleMsg:
        return ScheduleMsg(
            self.item_id,
            self.speed,
            [
                (s.stamp, s.pointer[0], s.pointer[1], s.touch.x, s.touch.y, s.touch.phase)
                for s in self.steps
            ],
            stamp,
        )


#: release delay for a degenerate single-cell path, microseconds
_MIN_STEP_US = 1000


def make_schedule(
    path: Path,
    speed: float,
    calibration: Transform2D,
    start_time: Timestamp,
    item_id: str = "",
    source: str = "robot_fake",
    touch_id: int = 1000,
) -> MotionSchedule:
    """Constant-speed fake-touch timeline along a planned path.

    One touch per cell traversal (down at the start cell, up at the goal
    cell); pointer poses are the calibrated robot-frame image of every
    touch position.
    """
    if speed <= 0:
        raise ValueError("speed must be positive")
    if not path.cells:
        raise ValueError("empty path")
    schedule = MotionSchedule(item_id, speed)
    res = path.resolution

    def _centre(cell):
        return ((cell[0] + 0.5) * res, (cell[1] + 0.5) * res)

    positions = [_centre(c) for c in path.cells]
    stamps = [start_time]
    dist = 0.0
    for (x0, y0), (x1, y1) in zip(positions, positions[1:]):
        dist += math.hypot(x1 - x0, y1 - y0)
        stamps.append(start_time + round(dist / speed * 1_000_000))
    if len(positions) == 1:
        positions.append(positions[0])
        stamps.append(start_time + _MIN_STEP_US)
    for i, ((x, y), stamp) in enumerate(zip(positions, stamps)):
        phase = "down" if i == 0 else ("up" if i == len(positions) - 1 else "move")
        touch = TouchEvent(touch_id, phase, x, y, source, stamp)
        schedule.steps.append(ScheduleStep(stamp, calibration.apply(x, y), touch))
    return schedule
