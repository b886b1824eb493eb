"""Robot action layer.

Covers the screen↔robot calibration from on-screen fiducial markers, the
action primitives (move item via planner + fake touches, point, gaze,
say), Wizard-of-Oz command intake, and the autonomous asocial baseline
policy (plays with items, never acts socially).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .bus import Bus
from .clock import Timestamp
from .engine import TOPIC_TOUCHES, GameEngine, TouchEvent, in_play_area
from .frames import Transform2D
from .planner import (
    DEFAULT_RESOLUTION,
    MotionSchedule,
    NoPath,
    PointerMsg,
    UnknownItem,
    build_occupancy,
    make_schedule,
    plan,
)
from .wire import message

TOPIC_SCHEDULE = "robot/schedule"
TOPIC_POINTER = "robot/pointer"
TOPIC_SOCIAL = "robot/social"
TOPIC_FIDUCIALS = "robot/fiducials"
TOPIC_WOZ = "woz/command"

ACTION_KINDS = ("move_item", "point_at", "gaze_at", "say")
ACTION_SOURCES = ("policy", "wizard")

MAX_CALIBRATION_RMS = 0.005
DEFAULT_DRAG_SPEED = 0.05
DEFAULT_POLICY_PAUSE_US = 15_000_000

#: fake touches get ids from this block so they never collide with fingers
ROBOT_TOUCH_ID_BASE = 1000


class RobotError(Exception):
    pass


class DegenerateInput(RobotError):
    pass


class CalibrationRejected(RobotError):
    pass


class NotCalibrated(RobotError):
    pass


class BusyItem(RobotError):
    pass


@message
@dataclass(frozen=True)
class SocialMsg:
    kind: str  # point_at | gaze_at | say
    text: str
    x: float
    y: float
    target: str
    stamp: Timestamp

    FIELDS = (
        ("kind", ("enum", ("point_at", "gaze_at", "say"))),
        ("text", "str"),
        ("x", "fp"),
        ("y", "fp"),
        ("target", "str"),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class FiducialsMsg:
    pairs: list  # (screen_x, screen_y, robot_x, robot_y)
    stamp: Timestamp

    FIELDS = (
        ("pairs", ("list", (("sx", "fp"), ("sy", "fp"), ("rx", "fp"), ("ry", "fp")))),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class WozCommandMsg:
    kind: str
    item_id: str
    x: float
    y: float
    text: str
    stamp: Timestamp

    FIELDS = (
        ("kind", ("enum", ACTION_KINDS)),
        ("item_id", "str"),
        ("x", "fp"),
        ("y", "fp"),
        ("text", "str"),
        ("stamp", "i64"),
    )


@dataclass(frozen=True)
class Calibration:
    screen_to_robot: Transform2D
    rms_residual: float
    marker_count: int

    @property
    def valid(self) -> bool:
        return self.rms_residual <= MAX_CALIBRATION_RMS


def fit_rigid_2d(src: list, dst: list) -> tuple[Transform2D, float]:
    """Least-squares rotation+translation (no scale) mapping src onto dst.

    Closed form: centroid subtraction, angle from the 2x2 cross-covariance.
    """
    n = len(src)
    if n < 2 or n != len(dst):
        raise DegenerateInput("need at least two correspondences")
    sx = sum(p[0] for p in src) / n
    sy = sum(p[1] for p in src) / n
    dx = sum(p[0] for p in dst) / n
    dy = sum(p[1] for p in dst) / n
    if all(math.isclose(p[0], sx, abs_tol=1e-12) and math.isclose(p[1], sy, abs_tol=1e-12) for p in src):
        raise DegenerateInput("screen points are coincident")
    num = 0.0  # Σ cross products -> sin
    den = 0.0  # Σ dot products  -> cos
    for (ax, ay), (bx, by) in zip(src, dst):
        ax, ay = ax - sx, ay - sy
        bx, by = bx - dx, by - dy
        num += ax * by - ay * bx
        den += ax * bx + ay * by
    theta = math.atan2(num, den)
    c, s = math.cos(theta), math.sin(theta)
    tx = dx - (c * sx - s * sy)
    ty = dy - (s * sx + c * sy)
    transform = Transform2D(theta, tx, ty)
    sq_err = 0.0
    for (ax, ay), (bx, by) in zip(src, dst):
        px, py = transform.apply(ax, ay)
        sq_err += (px - bx) ** 2 + (py - by) ** 2
    return transform, math.sqrt(sq_err / n)


def calibrate(correspondences: list) -> Calibration:
    """Fit the screen→robot transform from (screen point, robot point) pairs."""
    src = [pair[0] for pair in correspondences]
    dst = [pair[1] for pair in correspondences]
    transform, rms = fit_rigid_2d(src, dst)
    calibration = Calibration(transform, rms, len(correspondences))
    if not calibration.valid:
        raise CalibrationRejected(f"rms residual {rms:.4f} m exceeds {MAX_CALIBRATION_RMS} m")
    return calibration


@dataclass(frozen=True)
class RobotAction:
    kind: str
    stamp: Timestamp
    source: str  # policy | wizard
    item_id: str = ""
    x: float = 0.0
    y: float = 0.0
    target: str = ""
    text: str = ""


@dataclass
class PolicyState:
    """Asocial baseline policy: random item shuffling, no social actions."""

    rng: random.Random
    pause_us: int = DEFAULT_POLICY_PAUSE_US
    cooldown_until: Timestamp = 0
    forbidden: frozenset = frozenset({"gaze_at", "say", "point_at"})

    @staticmethod
    def seeded(seed: int, pause_us: int = DEFAULT_POLICY_PAUSE_US) -> "PolicyState":
        return PolicyState(random.Random(seed), pause_us)


def asocial_policy_step(
    items: list,
    policy: PolicyState,
    now: Timestamp,
    resolution: float = DEFAULT_RESOLUTION,
) -> RobotAction | None:
    """Pick a random item and a random free goal cell; never act socially.

    Returns None while on cool-down or when the board leaves no free cell.
    """
    if now < policy.cooldown_until or not items:
        return None
    item = items[policy.rng.randrange(len(items))]
    grid = build_occupancy(items, exclude=item.id, resolution=resolution)
    free = [
        (ix, iy)
        for iy in range(grid.ny)
        for ix in range(grid.nx)
        if not grid.occupied[iy, ix]
    ]
    if not free:
        return None
    goal = grid.centre(free[policy.rng.randrange(len(free))])
    policy.cooldown_until = now + policy.pause_us
    return RobotAction("move_item", now, "policy", item_id=item.id, x=goal[0], y=goal[1])


class ScheduleRunner:
    """Paces active motion schedules against the clock.

    step(now) publishes every due fake touch and pointer pose; a schedule
    finishing releases its item. drain() runs everything to completion.
    """

    def __init__(self, bus: Bus) -> None:
        self._bus = bus
        self._active: list[tuple[MotionSchedule, int]] = []
        self.busy: set[str] = set()

    def add(self, schedule: MotionSchedule) -> None:
        self._active.append((schedule, 0))
        self.busy.add(schedule.item_id)

    def next_due(self) -> Timestamp | None:
        stamps = [sched.steps[idx].stamp for sched, idx in self._active]
        return min(stamps) if stamps else None

    def step(self, now: Timestamp) -> int:
        emitted = 0
        still_active = []
        for sched, idx in self._active:
            while idx < len(sched.steps) and sched.steps[idx].stamp <= now:
                step = sched.steps[idx]
                self._bus.publish(TOPIC_TOUCHES, step.touch, step.stamp)
                self._bus.publish(
                    TOPIC_POINTER, PointerMsg(step.pointer[0], step.pointer[1], step.stamp),
                    step.stamp,
                )
                idx += 1
                emitted += 1
            if idx < len(sched.steps):
                still_active.append((sched, idx))
            else:
                self.busy.discard(sched.item_id)
        self._active = still_active
        return emitted

    def drain(self) -> int:
        emitted = 0
        while self._active:
            emitted += self.step(self._active[0][0].steps[-1].stamp)
        return emitted

    def cancel_all(self, now: Timestamp) -> None:
        """Abort outstanding schedules (e.g. at free-play end).

        A schedule that already touched down gets a synthetic `up` at its
        last emitted position so the engine releases the grab; nothing is
        ever published with a stamp in the future.
        """
        for sched, idx in self._active:
            if 0 < idx < len(sched.steps):
                last = sched.steps[idx - 1]
                release = TouchEvent(
                    last.touch.touch_id, "up", last.touch.x, last.touch.y,
                    last.touch.source, now,
                )
                self._bus.publish(TOPIC_TOUCHES, release, now)
            self.busy.discard(sched.item_id)
        self._active = []


class RobotController:
    """Executes robot actions against the engine through the planner."""

    def __init__(
        self,
        bus: Bus,
        engine: GameEngine,
        speed: float = DEFAULT_DRAG_SPEED,
        resolution: float = DEFAULT_RESOLUTION,
    ) -> None:
        self.bus = bus
        self.engine = engine
        self.speed = speed
        self.resolution = resolution
        self.calibration: Calibration | None = None
        self.runner = ScheduleRunner(bus)
        self._touch_counter = ROBOT_TOUCH_ID_BASE

    def set_calibration(self, calibration: Calibration) -> None:
        self.calibration = calibration

    def calibrate_from_pairs(self, pairs: list) -> Calibration:
        correspondences = [((sx, sy), (rx, ry)) for sx, sy, rx, ry in pairs]
        calibration = calibrate(correspondences)
        self.calibration = calibration
        return calibration

    def _require_calibration(self) -> Calibration:
        if self.calibration is None or not self.calibration.valid:
            raise NotCalibrated("no valid screen↔robot calibration")
        return self.calibration

    def execute(self, action: RobotAction) -> MotionSchedule | None:
        """Run one action; move_item returns its schedule (queued on the runner)."""
        if action.kind == "move_item":
            return self._move_item(action)
        if action.kind == "point_at":
            calibration = self._require_calibration()
            px, py = calibration.screen_to_robot.apply(action.x, action.y)
            self.bus.publish(TOPIC_POINTER, PointerMsg(px, py, action.stamp), action.stamp)
            self.bus.publish(
                TOPIC_SOCIAL,
                SocialMsg("point_at", "", action.x, action.y, action.target, action.stamp),
                action.stamp,
            )
            return None
        if action.kind == "gaze_at":
            self.bus.publish(
                TOPIC_SOCIAL,
                SocialMsg("gaze_at", "", action.x, action.y, action.target, action.stamp),
                action.stamp,
            )
            return None
        if action.kind == "say":
            self.bus.publish(
                TOPIC_SOCIAL,
                SocialMsg("say", action.text, 0.0, 0.0, action.target, action.stamp),
                action.stamp,
            )
            return None
        raise ValueError(f"unknown action kind {action.kind!r}")

    def _move_item(self, action: RobotAction) -> MotionSchedule:
        calibration = self._require_calibration()
        if not in_play_area(action.x, action.y):
            raise ValueError(f"goal ({action.x}, {action.y}) outside play area")
        item = self.engine.state.find_item(action.item_id)
        if item is None:
            raise UnknownItem(action.item_id)
        if action.item_id in self.runner.busy:
            raise BusyItem(action.item_id)
        grid = build_occupancy(self.engine.state.items, exclude=item.id, resolution=self.resolution)
        start = grid.cell_of(item.pose.x, item.pose.y)
        goal = grid.cell_of(action.x, action.y)
        if not grid.is_free(start):
            # items touching: escape the contact state
            grid.clear_region(start)
        path = plan(grid, start, goal)
        self._touch_counter += 1
        schedule = make_schedule(
            path,
            self.speed,
            calibration.screen_to_robot,
            action.stamp,
            item_id=item.id,
            touch_id=self._touch_counter,
        )
        self.bus.publish(TOPIC_SCHEDULE, schedule.to_msg(action.stamp), action.stamp)
        self.runner.add(schedule)
        return schedule

    def woz_apply(self, command: WozCommandMsg) -> RobotAction:
        """Wrap a wizard command as a RobotAction and execute it.

        Wizard actions bypass the policy cool-down entirely.
        """
        if command.kind == "move_item" and self.engine.state.find_item(command.item_id) is None:
            raise UnknownItem(command.item_id)
        action = RobotAction(
            command.kind,
            command.stamp,
            "wizard",
            item_id=command.item_id,
            x=command.x,
            y=command.y,
            text=command.text,
        )
        self.execute(action)
        return action

    def policy_step(self, policy: PolicyState, now: Timestamp) -> RobotAction | None:
        """Advance the autonomous policy; never emits social actions.

        A move that cannot execute right now (item still scheduled, goal
        unreachable) is dropped; the policy simply idles until its next
        cool-down expiry.
        """
        action = asocial_policy_step(self.engine.state.items, policy, now, self.resolution)
        if action is None:
            return None
        assert action.kind not in policy.forbidden
        try:
            self.execute(action)
        except (BusyItem, NoPath):
            pass
        return action
