"""Live game-interaction analytics.

Consumes the engine's output events only (item states, finalized
strokes, background rasters, completed drags), re-segments zones
whenever the drawing changes, and derives zone transitions and proximity
events from drag releases. The same class is fed record-by-record when
analysing a bag offline, so live and offline runs see an identical
stream.
"""

from __future__ import annotations

import numpy as np

from .bus import Bus, Event
from .clock import Timestamp
from .engine import (
    RASTER_NX,
    RASTER_NY,
    TOPIC_BACKGROUND,
    TOPIC_ITEMS,
    TOPIC_MOVES,
    TOPIC_RESET,
    TOPIC_STROKES,
    stroke_cells,
)
from .zones import (
    DEFAULT_PROXIMITY_THRESHOLD,
    ZoneMap,
    detect_proximity,
    detect_transition,
    segment,
)

TOPIC_ZONES = "analysis/zones"
TOPIC_TRANSITIONS = "analysis/transitions"
TOPIC_PROXIMITY = "analysis/proximity"


class GameAnalytics:
    """Zone/proximity analytics over the recorded game event stream."""

    def __init__(
        self,
        bus: Bus | None = None,
        proximity_threshold: float = DEFAULT_PROXIMITY_THRESHOLD,
    ) -> None:
        self.bus = bus
        self.threshold = proximity_threshold
        self._poses: dict[str, tuple[float, float]] = {}
        self._strokes: list = []  # (points, width, colour)
        self._background = np.zeros((RASTER_NY, RASTER_NX), dtype=np.uint8)
        self._zone_map: ZoneMap | None = None
        self._dirty = True
        self.transitions: list = []
        self.proximity: list = []
        self.move_counts: dict[str, int] = {}
        if bus is not None:
            bus.subscribe("game/*", self.handle)

    # -- event intake

    def handle(self, event: Event) -> None:
        topic, payload = event.topic, event.payload
        if topic == TOPIC_ITEMS:
            self._poses[payload.item_id] = (payload.x, payload.y)
        elif topic == TOPIC_STROKES:
            self._strokes.append((list(payload.points), payload.width, payload.colour))
            self._dirty = True
            self.zone_map(event.stamp)
        elif topic == TOPIC_BACKGROUND:
            grid = np.frombuffer(payload.cells, dtype=np.uint8)
            self._background = grid.reshape((payload.height, payload.width)).copy()
            self._dirty = True
            self.zone_map(event.stamp)
        elif topic == TOPIC_RESET:
            self._strokes.clear()
            self._poses.clear()
            self._dirty = True
        elif topic == TOPIC_MOVES:
            self._on_move(event)

    def composite(self) -> np.ndarray:
        grid = self._background.copy()
        for points, width, colour in self._strokes:
            for ix, iy in stroke_cells(points, width):
                grid[iy, ix] = colour
        return grid

    def zone_map(self, stamp: Timestamp = 0) -> ZoneMap:
        """Current segmentation, recomputed lazily after drawing changes."""
        if self._dirty or self._zone_map is None:
            self._zone_map = segment(self.composite())
            self._dirty = False
            if self.bus is not None:
                self.bus.publish(TOPIC_ZONES, self._zone_map.to_msg(stamp), stamp)
        return self._zone_map

    def _on_move(self, event: Event) -> None:
        move = event.payload
        if (move.x0, move.y0) != (move.x1, move.y1):
            self.move_counts[move.item_id] = self.move_counts.get(move.item_id, 0) + 1
        zmap = self.zone_map(event.stamp)
        transition = detect_transition(
            zmap, move.item_id, (move.x0, move.y0), (move.x1, move.y1), move.stamp
        )
        if transition is not None:
            self.transitions.append(transition)
            if self.bus is not None:
                self.bus.publish(TOPIC_TRANSITIONS, transition, move.stamp)
        after = dict(self._poses)
        after[move.item_id] = (move.x1, move.y1)
        before = dict(after)
        before[move.item_id] = (move.x0, move.y0)
        for prox in detect_proximity(before, after, self.threshold, move.stamp):
            self.proximity.append(prox)
            if self.bus is not None:
                self.bus.publish(TOPIC_PROXIMITY, prox, move.stamp)
