"""Free-play sandbox platform.

A shared-touchscreen free-play game with a synchronized record/replay
pipeline, zone analytics, occupancy-grid A* item planning, robot control
(WoZ and autonomous), an acquisition-protocol manager and
social-interaction annotation tooling.
"""

from .analytics import GameAnalytics
from .annotation import (
    AgreementReport,
    AnnotationStore,
    AnnotationTrack,
    duration_stats,
    kappa,
)
from .app import SandboxApp, declare_topics
from .bag import BagReader, BagWriter, Recorder, replay
from .bus import Bus, Event
from .clock import SystemClock, Timestamp, VirtualClock, micros
from .engine import (
    GameEngine,
    GameState,
    Item,
    StateTracker,
    Stroke,
    TouchEvent,
    load_scene,
    snapshot_hash,
)
from .frames import FrameTree, Transform2D, Transform3D
from .planner import MotionSchedule, OccupancyGrid, Path, build_occupancy, make_schedule, plan
from .robot import Calibration, PolicyState, RobotAction, RobotController, calibrate
from .script import parse_script, run_script
from .session import HealthRegistry, SessionManager, SessionRecord
from .zones import ZoneMap, detect_proximity, detect_transition, segment, zone_of

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "AnnotationStore",
    "AnnotationTrack",
    "BagReader",
    "BagWriter",
    "Bus",
    "Calibration",
    "Event",
    "FrameTree",
    "GameAnalytics",
    "GameEngine",
    "GameState",
    "HealthRegistry",
    "Item",
    "MotionSchedule",
    "OccupancyGrid",
    "Path",
    "PolicyState",
    "Recorder",
    "RobotAction",
    "RobotController",
    "SandboxApp",
    "SessionManager",
    "SessionRecord",
    "StateTracker",
    "Stroke",
    "SystemClock",
    "Timestamp",
    "TouchEvent",
    "Transform2D",
    "Transform3D",
    "VirtualClock",
    "ZoneMap",
    "build_occupancy",
    "calibrate",
    "declare_topics",
    "detect_proximity",
    "detect_transition",
    "duration_stats",
    "kappa",
    "load_scene",
    "make_schedule",
    "micros",
    "parse_script",
    "plan",
    "replay",
    "run_script",
    "segment",
    "snapshot_hash",
    "zone_of",
]
