"""Authoritative game state: items, drawing layer, background.

The engine consumes touch events (children, wizard or robot fake
touches) from the bus and publishes typed deltas. It never publishes to
the touch topic itself, so a recorded touch stream can be replayed into
a fresh engine without feedback.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .bus import Bus, Event
from .clock import Timestamp
from .frames import FrameTree, Transform2D, Transform3D
from .wire import FP_SCALE, message

# Play area (the sandtray screen), metres, origin at bottom-left.
PLAY_W = 0.60
PLAY_H = 0.33

# Shared raster grid for the background and stroke layer: 5 mm cells.
RASTER_CELL = 0.005
RASTER_NX = 120
RASTER_NY = 66

# A touch grabs an item when it falls inside the footprint box inflated
# by this margin (finger-sized tolerance).
CAPTURE_MARGIN = 0.005

DEFAULT_STROKE_WIDTH = 0.005

# Symbolic colour classes for the background and pen.
PALETTE = (
    ("water_blue", "#3d7dd8"),
    ("grass_green", "#58a84c"),
    ("sand_yellow", "#e7cf6e"),
    ("bush_dark_green", "#2d5d2a"),
    ("brown", "#8a5a2b"),
    ("red", "#c94034"),
    ("white", "#f4f4f4"),
    ("black", "#1c1c1c"),
)

ITEM_KINDS = ("animal", "character", "object")
TOUCH_SOURCES = ("child_purple", "child_yellow", "wizard", "robot_fake")
TOUCH_PHASES = ("down", "move", "up")
TOOLS = ("drag", "draw")
MODES = ("tutorial", "freeplay")

TOPIC_TOUCHES = "game/touches"
TOPIC_TOOLS = "game/tools"
TOPIC_ITEMS = "game/items"
TOPIC_STROKES = "game/strokes"
TOPIC_BACKGROUND = "game/background"
TOPIC_MOVES = "game/moves"
TOPIC_RESET = "game/reset"
TOPIC_WARNINGS = "game/warnings"


class SceneError(Exception):
    pass


# ---------------------------------------------------------------------------
# bus payloads


@message
@dataclass(frozen=True)
class TouchEvent:
    touch_id: int
    phase: str  # down | move | up
    x: float
    y: float
    source: str
    stamp: Timestamp

    FIELDS = (
        ("touch_id", "u32"),
        ("phase", ("enum", TOUCH_PHASES)),
        ("x", "fp"),
        ("y", "fp"),
        ("source", ("enum", TOUCH_SOURCES)),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class ToolSelect:
    source: str
    tool: str  # drag | draw
    colour: int
    stamp: Timestamp

    FIELDS = (
        ("source", ("enum", TOUCH_SOURCES)),
        ("tool", ("enum", TOOLS)),
        ("colour", "u8"),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class ItemState:
    """Full item record; used both for drag deltas and start-of-bag snapshots."""

    item_id: str
    kind: str
    x: float
    y: float
    theta: float
    w: float
    h: float
    z: int
    snapshot: bool
    stamp: Timestamp

    FIELDS = (
        ("item_id", "str"),
        ("kind", ("enum", ITEM_KINDS)),
        ("x", "fp"),
        ("y", "fp"),
        ("theta", "f64"),
        ("w", "fp"),
        ("h", "fp"),
        ("z", "i32"),
        ("snapshot", "bool"),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class StrokeMsg:
    colour: int
    width: float
    points: list  # (x, y, stamp) tuples
    snapshot: bool
    stamp: Timestamp

    FIELDS = (
        ("colour", "u8"),
        ("width", "fp"),
        ("points", ("list", (("x", "fp"), ("y", "fp"), ("t", "i64")))),
        ("snapshot", "bool"),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class BackgroundMsg:
    width: int
    height: int
    cells: bytes  # row-major palette indices, one byte per cell
    stamp: Timestamp

    FIELDS = (
        ("width", "u16"),
        ("height", "u16"),
        ("cells", "bytes"),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class MoveRecord:
    """Completed drag of one item: pose at grab and pose at release."""

    item_id: str
    source: str
    x0: float
    y0: float
    x1: float
    y1: float
    start: Timestamp
    stamp: Timestamp

    FIELDS = (
        ("item_id", "str"),
        ("source", ("enum", TOUCH_SOURCES)),
        ("x0", "fp"),
        ("y0", "fp"),
        ("x1", "fp"),
        ("y1", "fp"),
        ("start", "i64"),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class ResetMsg:
    stamp: Timestamp

    FIELDS = (("stamp", "i64"),)


@message
@dataclass(frozen=True)
class WarningMsg:
    code: str  # out_of_bounds | phase_violation
    detail: str
    stamp: Timestamp

    FIELDS = (("code", "str"), ("detail", "str"), ("stamp", "i64"))


# ---------------------------------------------------------------------------
# state


@dataclass
class Item:
    id: str
    kind: str
    pose: Transform2D
    w: float
    h: float
    z: int


@dataclass
class Stroke:
    colour: int
    width: float
    points: list  # (x, y, stamp)


@dataclass
class _Grab:
    item_id: str
    x0: float
    y0: float
    start: Timestamp
    source: str


@dataclass
class _StrokeInProgress:
    stroke: Stroke


@dataclass
class GameState:
    items: list = field(default_factory=list)
    strokes: list = field(default_factory=list)
    background: np.ndarray = field(
        default_factory=lambda: np.zeros((RASTER_NY, RASTER_NX), dtype=np.uint8)
    )
    mode: str = "tutorial"
    active_grabs: dict = field(default_factory=dict)  # touch_id -> grab/stroke/None

    def find_item(self, item_id: str):
        for item in self.items:
            if item.id == item_id:
                return item
        return None


def clamp_position(x: float, y: float) -> tuple[float, float]:
    return (min(max(x, 0.0), PLAY_W), min(max(y, 0.0), PLAY_H))


def in_play_area(x: float, y: float) -> bool:
    return 0.0 <= x <= PLAY_W and 0.0 <= y <= PLAY_H


# ---------------------------------------------------------------------------
# scene description files
#
# Plain text, one entry per line:
#   <id> <kind> <x> <y> <w> <h> <z>     an item
#   background <palette index>          fill the whole background
#   rect <x> <y> <w> <h> <palette>      paint a background rectangle
# '#' starts a comment.

DEFAULT_SCENE = """\
# default free-play scene
background 2
rect 0.00 0.22 0.60 0.11 0
rect 0.00 0.00 0.60 0.08 1
rect 0.45 0.09 0.13 0.12 3

croc      animal    0.10 0.26 0.055 0.030 1
zebra     animal    0.20 0.05 0.050 0.035 1
elephant  animal    0.33 0.27 0.060 0.040 1
boy       character 0.44 0.16 0.030 0.045 2
girl      character 0.52 0.16 0.030 0.045 2
ball      object    0.30 0.16 0.025 0.025 3
box       object    0.05 0.12 0.040 0.040 0
"""


def _paint_rect(grid: np.ndarray, x: float, y: float, w: float, h: float, colour: int) -> None:
    ix0 = max(0, int(math.floor(x / RASTER_CELL)))
    iy0 = max(0, int(math.floor(y / RASTER_CELL)))
    ix1 = min(RASTER_NX, int(math.ceil((x + w) / RASTER_CELL)))
    iy1 = min(RASTER_NY, int(math.ceil((y + h) / RASTER_CELL)))
    grid[iy0:iy1, ix0:ix1] = colour


def load_scene(text: str) -> GameState:
    state = GameState()
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "background":
                colour = int(parts[1])
                if not 0 <= colour < len(PALETTE):
                    raise SceneError(f"line {lineno}: bad palette index {colour}")
                state.background[:, :] = colour
            elif parts[0] == "rect":
                x, y, w, h = map(float, parts[1:5])
                colour = int(parts[5])
                if not 0 <= colour < len(PALETTE):
                    raise SceneError(f"line {lineno}: bad palette index {colour}")
                _paint_rect(state.background, x, y, w, h, colour)
            else:
                if len(parts) != 7:
                    raise SceneError(f"line {lineno}: expected 'id kind x y w h z'")
                item_id, kind = parts[0], parts[1]
                x, y, w, h = map(float, parts[2:6])
                z = int(parts[6])
                if kind not in ITEM_KINDS:
                    raise SceneError(f"line {lineno}: unknown kind {kind!r}")
                if item_id in seen:
                    raise SceneError(f"line {lineno}: duplicate item id {item_id!r}")
                if w <= 0 or h <= 0:
                    raise SceneError(f"line {lineno}: footprint must be positive")
                if not in_play_area(x, y):
                    raise SceneError(f"line {lineno}: item {item_id!r} outside play area")
                seen.add(item_id)
                state.items.append(Item(item_id, kind, Transform2D.translation(x, y), w, h, z))
        except (ValueError, IndexError):
            raise SceneError(f"line {lineno}: cannot parse {raw!r}") from None
    return state


# ---------------------------------------------------------------------------
# stroke rasterization


def _segment_cells(x0, y0, x1, y1, radius) -> set[tuple[int, int]]:
    """Cells whose centre lies within `radius` of the segment (p0, p1)."""
    cells = set()
    min_x = min(x0, x1) - radius
    max_x = max(x0, x1) + radius
    min_y = min(y0, y1) - radius
    max_y = max(y0, y1) + radius
    ix0 = max(0, int(math.floor(min_x / RASTER_CELL)))
    ix1 = min(RASTER_NX - 1, int(math.floor(max_x / RASTER_CELL)))
    iy0 = max(0, int(math.floor(min_y / RASTER_CELL)))
    iy1 = min(RASTER_NY - 1, int(math.floor(max_y / RASTER_CELL)))
    dx, dy = x1 - x0, y1 - y0
    seg_len2 = dx * dx + dy * dy
    for iy in range(iy0, iy1 + 1):
        cy = (iy + 0.5) * RASTER_CELL
        for ix in range(ix0, ix1 + 1):
            cx = (ix + 0.5) * RASTER_CELL
            if seg_len2 == 0.0:
                px, py = x0, y0
            else:
                t = ((cx - x0) * dx + (cy - y0) * dy) / seg_len2
                t = min(1.0, max(0.0, t))
                px, py = x0 + t * dx, y0 + t * dy
            if math.hypot(cx - px, cy - py) <= radius:
                cells.add((ix, iy))
    return cells


def stroke_cells(points, width: float) -> set[tuple[int, int]]:
    """Raster cells covered by a stroke polyline of the given pen width."""
    radius = width / 2.0
    cells: set[tuple[int, int]] = set()
    if len(points) == 1:
        x, y = points[0][0], points[0][1]
        return _segment_cells(x, y, x, y, radius)
    for (x0, y0, _), (x1, y1, _) in zip(points, points[1:]):
        cells |= _segment_cells(x0, y0, x1, y1, radius)
    return cells


def composite_raster(state: GameState) -> np.ndarray:
    """Background overwritten by the rasterized strokes, in stroke order."""
    grid = state.background.copy()
    for stroke in state.strokes:
        for ix, iy in stroke_cells(stroke.points, stroke.width):
            grid[iy, ix] = stroke.colour
    return grid


# ---------------------------------------------------------------------------
# snapshot hashing


def _fp(v: float) -> int:
    return round(v * FP_SCALE)


def canonical_bytes(state: GameState) -> bytes:
    """Fixed-order, fixed-point serialization of the hashed state fields."""
    out = bytearray()
    out += struct.pack("<I", len(state.items))
    for item in sorted(state.items, key=lambda i: i.id):
        raw = item.id.encode("utf-8")
        out += struct.pack("<H", len(raw))
        out += raw
        out += struct.pack(
            "<Biiidii",
            ITEM_KINDS.index(item.kind),
            _fp(item.pose.x),
            _fp(item.pose.y),
            item.z,
            item.pose.theta,
            _fp(item.w),
            _fp(item.h),
        )
    out += struct.pack("<I", len(state.strokes))
    for stroke in state.strokes:
        out += struct.pack("<BiI", stroke.colour, _fp(stroke.width), len(stroke.points))
        for x, y, t in stroke.points:
            out += struct.pack("<iiq", _fp(x), _fp(y), t)
    out += struct.pack("<HH", RASTER_NX, RASTER_NY)
    out += state.background.tobytes()
    out += struct.pack("<B", MODES.index(state.mode))
    return bytes(out)


def snapshot_hash(state: GameState) -> int:
    """Stable 64-bit digest of (items, strokes, background, mode)."""
    digest = hashlib.blake2b(canonical_bytes(state), digest_size=8).digest()
    return int.from_bytes(digest, "little")


# ---------------------------------------------------------------------------
# engine


class GameEngine:
    """Single-writer game engine.

    All touches are funneled through one ordered stream (the bus, or
    direct apply_touch calls); published payloads are immutable.
    """

    def __init__(
        self,
        bus: Bus | None = None,
        scene: str = DEFAULT_SCENE,
        frames: FrameTree | None = None,
        stroke_width: float = DEFAULT_STROKE_WIDTH,
    ) -> None:
        self._scene_text = scene
        self.state = load_scene(scene)
        self.bus = bus
        self.frames = frames
        self.stroke_width = stroke_width
        self._tools: dict[str, tuple[str, int]] = {}  # source -> (tool, colour)
        if frames is not None:
            for item in self.state.items:
                frames.attach_dynamic(f"item/{item.id}", "sandtray")
                frames.update(f"item/{item.id}", Transform3D.from_2d(item.pose), 0)
        if bus is not None:
            bus.subscribe(TOPIC_TOUCHES, self._on_touch)
            bus.subscribe(TOPIC_TOOLS, self._on_tool)
            bus.subscribe(TOPIC_RESET, self._on_reset)

    # -- bus handlers

    def _on_touch(self, event: Event) -> None:
        self.apply_touch(event.payload)

    def _on_tool(self, event: Event) -> None:
        msg = event.payload
        self.set_tool(msg.source, msg.tool, msg.colour)

    def _on_reset(self, event: Event) -> None:
        self.reset(event.payload.stamp)

    def _emit(self, topic: str, payload, stamp: Timestamp, out: list) -> None:
        out.append((topic, payload))
        if self.bus is not None:
            self.bus.publish(topic, payload, stamp)

    # -- tool selection

    def set_tool(self, source: str, tool: str, colour: int = 7) -> None:
        if tool not in TOOLS:
            raise ValueError(f"unknown tool {tool!r}")
        if not 0 <= colour < len(PALETTE):
            raise ValueError(f"bad palette index {colour}")
        self._tools[source] = (tool, colour)

    def tool_of(self, source: str) -> tuple[str, int]:
        return self._tools.get(source, ("drag", len(PALETTE) - 1))

    # -- touch pipeline

    def apply_touch(self, ev: TouchEvent) -> list:
        """Apply one touch event; returns the list of (topic, payload) deltas."""
        out: list = []
        x, y = ev.x, ev.y
        if not in_play_area(x, y):
            x, y = clamp_position(x, y)
            self._emit(
                TOPIC_WARNINGS,
                WarningMsg("out_of_bounds", f"touch {ev.touch_id} clamped", ev.stamp),
                ev.stamp,
                out,
            )
        grabs = self.state.active_grabs
        if ev.phase == "down":
            if ev.touch_id in grabs:
                self._warn_phase(ev, "down while active", out)
                return out
            grabs[ev.touch_id] = self._begin_touch(ev, x, y, out)
        elif ev.phase == "move":
            if ev.touch_id not in grabs:
                self._warn_phase(ev, "move with no prior down", out)
                return out
            self._continue_touch(grabs[ev.touch_id], ev, x, y, out)
        else:  # up
            if ev.touch_id not in grabs:
                self._warn_phase(ev, "up with no prior down", out)
                return out
            self._finish_touch(grabs.pop(ev.touch_id), ev, x, y, out)
        return out

    def _warn_phase(self, ev: TouchEvent, detail: str, out: list) -> None:
        self._emit(
            TOPIC_WARNINGS,
            WarningMsg("phase_violation", f"touch {ev.touch_id}: {detail}", ev.stamp),
            ev.stamp,
            out,
        )

    def _begin_touch(self, ev: TouchEvent, x: float, y: float, out: list):
        tool, colour = self.tool_of(ev.source)
        if tool == "draw":
            stroke = Stroke(colour, self.stroke_width, [(x, y, ev.stamp)])
            return _StrokeInProgress(stroke)
        grabbed = {
            g.item_id for g in self.state.active_grabs.values() if isinstance(g, _Grab)
        }
        candidates = [
            item
            for item in self.state.items
            if item.id not in grabbed
            and abs(x - item.pose.x) <= item.w / 2.0 + CAPTURE_MARGIN
            and abs(y - item.pose.y) <= item.h / 2.0 + CAPTURE_MARGIN
        ]
        if not candidates:
            return None
        top = min(candidates, key=lambda item: (-item.z, item.id))
        return _Grab(top.id, top.pose.x, top.pose.y, ev.stamp, ev.source)

    def _continue_touch(self, grab, ev: TouchEvent, x: float, y: float, out: list) -> None:
        if isinstance(grab, _StrokeInProgress):
            points = grab.stroke.points
            if (x, y) != (points[-1][0], points[-1][1]):
                points.append((x, y, ev.stamp))
        elif isinstance(grab, _Grab):
            item = self.state.find_item(grab.item_id)
            self._move_item(item, x, y, ev.stamp, out)

    def _finish_touch(self, grab, ev: TouchEvent, x: float, y: float, out: list) -> None:
        if isinstance(grab, _StrokeInProgress):
            points = grab.stroke.points
            if (x, y) != (points[-1][0], points[-1][1]):
                points.append((x, y, ev.stamp))
            self.state.strokes.append(grab.stroke)
            self._emit(
                TOPIC_STROKES,
                StrokeMsg(
                    grab.stroke.colour,
                    grab.stroke.width,
                    list(grab.stroke.points),
                    False,
                    ev.stamp,
                ),
                ev.stamp,
                out,
            )
        elif isinstance(grab, _Grab):
            item = self.state.find_item(grab.item_id)
            self._move_item(item, x, y, ev.stamp, out)
            self._emit(
                TOPIC_MOVES,
                MoveRecord(
                    item.id,
                    grab.source,
                    grab.x0,
                    grab.y0,
                    item.pose.x,
                    item.pose.y,
                    grab.start,
                    ev.stamp,
                ),
                ev.stamp,
                out,
            )

    def _move_item(self, item: Item, x: float, y: float, stamp: Timestamp, out: list) -> None:
        x, y = clamp_position(x, y)
        item.pose = replace(item.pose, x=x, y=y)
        if self.frames is not None:
            self.frames.update(f"item/{item.id}", Transform3D.from_2d(item.pose), stamp)
        self._emit(TOPIC_ITEMS, self._item_state(item, False, stamp), stamp, out)

    def _item_state(self, item: Item, snapshot: bool, stamp: Timestamp) -> ItemState:
        return ItemState(
            item.id, item.kind, item.pose.x, item.pose.y, item.pose.theta,
            item.w, item.h, item.z, snapshot, stamp,
        )

    # -- state control

    def set_mode(self, mode: str) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}")
        self.state.mode = mode

    def reset(self, stamp: Timestamp = 0) -> list:
        """Restore the default scene layout; clears strokes and grabs."""
        self.state = load_scene(self._scene_text)
        if self.frames is not None:
            for item in self.state.items:
                self.frames.update(f"item/{item.id}", Transform3D.from_2d(item.pose), stamp)
        # full snapshot so downstream trackers rebuild the restored layout
        return self.publish_snapshot(stamp)

    def publish_snapshot(self, stamp: Timestamp) -> list:
        """Emit the full current state (used when bag recording starts)."""
        out: list = []
        self._emit(
            TOPIC_BACKGROUND,
            BackgroundMsg(RASTER_NX, RASTER_NY, self.state.background.tobytes(), stamp),
            stamp,
            out,
        )
        for item in sorted(self.state.items, key=lambda i: i.id):
            self._emit(TOPIC_ITEMS, self._item_state(item, True, stamp), stamp, out)
        for stroke in self.state.strokes:
            self._emit(
                TOPIC_STROKES,
                StrokeMsg(stroke.colour, stroke.width, list(stroke.points), True, stamp),
                stamp,
                out,
            )
        return out

    # -- direct state application (replay/seek support)

    def force_item(self, msg: ItemState) -> None:
        item = self.state.find_item(msg.item_id)
        if item is None:
            item = Item(
                msg.item_id, msg.kind, Transform2D(msg.theta, msg.x, msg.y), msg.w, msg.h, msg.z
            )
            self.state.items.append(item)
        else:
            item.pose = Transform2D(msg.theta, msg.x, msg.y)
            item.kind, item.w, item.h, item.z = msg.kind, msg.w, msg.h, msg.z

    def force_stroke(self, msg: StrokeMsg) -> None:
        self.state.strokes.append(Stroke(msg.colour, msg.width, list(msg.points)))

    def force_background(self, msg: BackgroundMsg) -> None:
        grid = np.frombuffer(msg.cells, dtype=np.uint8).reshape((msg.height, msg.width))
        self.state.background = grid.copy()

    def hash(self) -> int:
        return snapshot_hash(self.state)


class StateTracker:
    """Rebuilds game state from a recorded event stream.

    Touch/tool/reset events are re-applied through a private engine;
    snapshot-flagged item and stroke events (plus background rasters)
    are force-applied so tracking can start from an empty scene.
    """

    def __init__(self, scene: str = "") -> None:
        self.engine = GameEngine(bus=None, scene=scene)

    def handle(self, event: Event) -> None:
        topic, payload = event.topic, event.payload
        if topic == TOPIC_TOUCHES:
            self.engine.apply_touch(payload)
        elif topic == TOPIC_TOOLS:
            self.engine.set_tool(payload.source, payload.tool, payload.colour)
        elif topic == TOPIC_RESET:
            self.engine.reset(payload.stamp)
        elif topic == TOPIC_ITEMS:
            if payload.snapshot:
                self.engine.force_item(payload)
        elif topic == TOPIC_STROKES:
            if payload.snapshot:
                self.engine.force_stroke(payload)
        elif topic == TOPIC_BACKGROUND:
            self.engine.force_background(payload)
        elif topic == "session/stage":
            self.engine.set_mode("freeplay" if payload.stage == "freeplay" else "tutorial")

    @property
    def state(self) -> GameState:
        return self.engine.state

    def hash(self) -> int:
        return self.engine.hash()
