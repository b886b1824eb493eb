"""Wiring of a full sandbox instance: bus topics, engine, analytics,
robot controller, session manager and the camera frame registry."""

from __future__ import annotations

from dataclasses import dataclass

from . import analytics as _analytics
from . import engine as _engine
from . import planner as _planner
from . import robot as _robot
from . import session as _session
from . import zones as _zones
from .annotation import TOPIC_ANNOT_ADD, AnnotationMsg, AnnotationStore
from .bus import Bus, Event
from .clock import Clock, SystemClock
from .frames import FrameTree, Transform3D
from .wire import message

TOPIC_BLOB_PREFIX = "blob/"


@message
@dataclass(frozen=True)
class BlobMsg:
    """Opaque byte chunk standing in for the camera/audio streams."""

    name: str
    data: bytes
    stamp: int

    FIELDS = (("name", "str"), ("data", "bytes"), ("stamp", "i64"))


#: every declared topic and its payload schema
TOPIC_SCHEMAS = {
    _engine.TOPIC_TOUCHES: _engine.TouchEvent,
    _engine.TOPIC_TOOLS: _engine.ToolSelect,
    _engine.TOPIC_ITEMS: _engine.ItemState,
    _engine.TOPIC_STROKES: _engine.StrokeMsg,
    _engine.TOPIC_BACKGROUND: _engine.BackgroundMsg,
    _engine.TOPIC_MOVES: _engine.MoveRecord,
    _engine.TOPIC_RESET: _engine.ResetMsg,
    _engine.TOPIC_WARNINGS: _engine.WarningMsg,
    _analytics.TOPIC_ZONES: _zones.ZoneMapMsg,
    _analytics.TOPIC_TRANSITIONS: _zones.ZoneTransitionMsg,
    _analytics.TOPIC_PROXIMITY: _zones.ProximityMsg,
    "robot/plan_request": _planner.PlanRequestMsg,
    _robot.TOPIC_SCHEDULE: _planner.ScheduleMsg,
    _robot.TOPIC_POINTER: _planner.PointerMsg,
    _robot.TOPIC_SOCIAL: _robot.SocialMsg,
    _robot.TOPIC_FIDUCIALS: _robot.FiducialsMsg,
    _robot.TOPIC_WOZ: _robot.WozCommandMsg,
    _session.TOPIC_STAGE: _session.StageMsg,
    _session.TOPIC_DEMOGRAPHICS: _session.DemographicsMsg,
    _session.TOPIC_HEALTH: _session.HealthMsg,
    TOPIC_ANNOT_ADD: AnnotationMsg,
    TOPIC_BLOB_PREFIX + "camera_purple": BlobMsg,
    TOPIC_BLOB_PREFIX + "camera_yellow": BlobMsg,
    TOPIC_BLOB_PREFIX + "camera_env": BlobMsg,
    TOPIC_BLOB_PREFIX + "audio": BlobMsg,
}

#: fixed mounting poses of the face/environment cameras relative to the screen
CAMERA_MOUNTS = {
    "camera_purple": Transform3D((0.9238795325112867, 0.0, 0.3826834323650898, 0.0), (0.30, -0.05, 0.25)),
    "camera_yellow": Transform3D((0.9238795325112867, 0.0, -0.3826834323650898, 0.0), (0.30, 0.38, 0.25)),
    "camera_env": Transform3D((1.0, 0.0, 0.0, 0.0), (0.30, 0.165, 1.20)),
}

MODULES = ("engine", "bus", "planner", "robot", "analytics", "session", "gateway")


def declare_topics(bus: Bus) -> None:
    for topic, schema in TOPIC_SCHEMAS.items():
        bus.declare(topic, schema)


class SandboxApp:
    """One live (or scripted) sandbox instance."""

    def __init__(
        self,
        clock: Clock | None = None,
        scene: str = _engine.DEFAULT_SCENE,
        out_dir: str = ".",
        robot_speed: float = _robot.DEFAULT_DRAG_SPEED,
        proximity_threshold: float | None = None,
    ) -> None:
        self.clock = clock if clock is not None else SystemClock()
        self.bus = Bus()
        declare_topics(self.bus)
        self.frames = FrameTree()
        for name, mount in CAMERA_MOUNTS.items():
            self.frames.attach_static(name, "sandtray", mount)
        self.engine = _engine.GameEngine(self.bus, scene=scene, frames=self.frames)
        kwargs = {}
        if proximity_threshold is not None:
            kwargs["proximity_threshold"] = proximity_threshold
        self.analytics = _analytics.GameAnalytics(self.bus, **kwargs)
        self.robot = _robot.RobotController(self.bus, self.engine, speed=robot_speed)
        self.session = _session.SessionManager(self.bus, self.engine, self.clock, out_dir)
        self.annotations = AnnotationStore()
        self.policy: _robot.PolicyState | None = None
        self.frames.attach_dynamic("robot", "sandtray")
        self.bus.subscribe(TOPIC_ANNOT_ADD, self._on_annotation)
        self.bus.subscribe(_robot.TOPIC_FIDUCIALS, self._on_fiducials)
        self.bus.subscribe("robot/plan_request", self._on_plan_request)
        for module in MODULES:
            self.session.health.register(module, self.clock.now())
        # seed analytics state (background, item poses) before any recording
        self.engine.publish_snapshot(self.clock.now())

    def _on_annotation(self, event: Event) -> None:
        self.annotations.apply(event.payload)

    def _on_fiducials(self, event: Event) -> None:
        calibration = self.robot.calibrate_from_pairs(event.payload.pairs)
        # the "robot" frame maps robot coordinates into the screen plane
        self.frames.update(
            "robot",
            Transform3D.from_2d(calibration.screen_to_robot.invert()),
            event.stamp,
        )

    def _on_plan_request(self, event: Event) -> None:
        """Bus-level motion API: plan and run a move for (item, goal)."""
        req = event.payload
        action = _robot.RobotAction(
            "move_item", event.stamp, "policy", item_id=req.item_id, x=req.x, y=req.y
        )
        self.robot.execute(action)

    def enable_policy(self, seed: int, pause_us: int = _robot.DEFAULT_POLICY_PAUSE_US) -> None:
        self.policy = _robot.PolicyState.seeded(seed, pause_us)

    def tick(self, now: int | None = None) -> None:
        """Timer body: session cap, schedule pacing, policy, heartbeats."""
        if now is None:
            now = self.clock.now()
        self.session.tick(now)
        self.robot.runner.step(now)
        if (
            self.policy is not None
            and self.session.active is not None
            and self.session.active.stage == "freeplay"
            and self.session.active.condition == "child_robot"
        ):
            self.robot.policy_step(self.policy, now)
        for module in MODULES:
            self.session.health.beat(module, now)
