"""Acquisition-protocol state machine, demographics and module health.

One session at a time walks greetings → tutorial → freeplay →
debriefing → done. Bag recording is active exactly during freeplay; the
free-play stage auto-advances when it reaches the 40 minute cap.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

from .bag import BAG_EXTENSION, Recorder
from .bus import Bus
from .clock import Clock, Timestamp
from .engine import GameEngine, ResetMsg, TOPIC_RESET
from .wire import message

STAGES = ("greetings", "tutorial", "freeplay", "debriefing", "done")
CONDITIONS = ("child_child", "child_robot")
CHILD_COLOURS = ("purple", "yellow")

FREEPLAY_CAP_US = 2400 * 1_000_000  # up to 40 minutes of free play
STALE_HEARTBEAT_US = 2_000_000
AGE_RANGE = (4, 8)

#: prompt ideas offered when the children run out of things to play
IDEAS_BOX = (
    "a zoo",
    "a farm",
    "a day at the beach",
    "a jungle adventure",
    "a picnic by the water",
    "a rescue mission",
)

#: experimenter checklist per stage (human script, not machine-enforced)
STAGE_CHECKLIST = {
    "greetings": (
        "explain the purpose of the study",
        "present the robot briefly",
        "place children on cushions",
        "complete demographics on the tablet",
        "remind the children that they can withdraw at any time",
    ),
    "tutorial": (
        "show how to drag items and draw",
        "check both children are confident",
    ),
    "freeplay": (
        "give the initial prompt (mention the ideas box)",
        "let the children play",
        "stop recording when they wish to stop",
    ),
    "debriefing": (
        "answer the children's questions",
        "give a small reward",
    ),
    "done": ("reset the game for the next session",),
}

TOPIC_STAGE = "session/stage"
TOPIC_DEMOGRAPHICS = "session/demographics"
TOPIC_HEALTH = "session/health"


class SessionError(Exception):
    pass


class IllegalTransition(SessionError):
    pass


class WrongStage(SessionError):
    pass


class SessionActive(SessionError):
    pass


@message
@dataclass(frozen=True)
class StageMsg:
    session_id: str
    condition: str
    stage: str
    stamp: Timestamp

    FIELDS = (
        ("session_id", "str"),
        ("condition", ("enum", CONDITIONS)),
        ("stage", ("enum", STAGES)),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class DemographicsMsg:
    session_id: str
    entries: list  # (colour, age, out_of_range, note)
    stamp: Timestamp

    FIELDS = (
        ("session_id", "str"),
        (
            "entries",
            (
                "list",
                (
                    ("colour", ("enum", CHILD_COLOURS)),
                    ("age", "u8"),
                    ("out_of_range", "bool"),
                    ("note", "str"),
                ),
            ),
        ),
        ("stamp", "i64"),
    )


@message
@dataclass(frozen=True)
class HealthMsg:
    modules: list  # (name, running, age_us, epoch)
    stamp: Timestamp

    FIELDS = (
        (
            "modules",
            (
                "list",
                (
                    ("name", "str"),
                    ("running", "bool"),
                    ("age_us", "i64"),
                    ("epoch", "u32"),
                ),
            ),
        ),
        ("stamp", "i64"),
    )


@dataclass
class StageSpan:
    stage: str
    enter: Timestamp
    exit: Timestamp | None = None


@dataclass
class Demographic:
    colour: str
    age: int
    out_of_range: bool = False
    note: str = ""


@dataclass
class SessionRecord:
    session_id: str
    condition: str
    demographics: list = field(default_factory=list)
    stages: list = field(default_factory=list)
    bag_path: str = ""

    @property
    def stage(self) -> str | None:
        return self.stages[-1].stage if self.stages else None

    def stage_span(self, stage: str) -> StageSpan | None:
        for span in self.stages:
            if span.stage == stage:
                return span
        return None

    def freeplay_duration_us(self) -> int | None:
        span = self.stage_span("freeplay")
        if span is None or span.exit is None:
            return None
        return span.exit - span.enter


@dataclass
class _ModuleHealth:
    last_beat: Timestamp
    epoch: int = 0
    restart_fn: object = None


class HealthRegistry:
    """Heartbeat bookkeeping for the experimenter dashboard."""

    def __init__(self) -> None:
        self._modules: dict[str, _ModuleHealth] = {}

    def register(self, name: str, now: Timestamp, restart_fn=None) -> None:
        self._modules[name] = _ModuleHealth(now, 0, restart_fn)

    def beat(self, name: str, now: Timestamp) -> None:
        module = self._modules.get(name)
        if module is None:
            self._modules[name] = _ModuleHealth(now)
        else:
            module.last_beat = now

    def restart(self, name: str, now: Timestamp) -> int:
        module = self._modules[name]
        if module.restart_fn is not None:
            module.restart_fn()
        module.epoch += 1
        module.last_beat = now
        return module.epoch

    def epoch(self, name: str) -> int:
        return self._modules[name].epoch

    def report(self, now: Timestamp) -> list:
        """Per-module (name, running, age_us, epoch); stale after 2 s silence."""
        out = []
        for name in sorted(self._modules):
            module = self._modules[name]
            age = now - module.last_beat
            out.append((name, age <= STALE_HEARTBEAT_US, age, module.epoch))
        return out

    def to_msg(self, now: Timestamp) -> HealthMsg:
        return HealthMsg(self.report(now), now)


def _successor(stage: str) -> str | None:
    idx = STAGES.index(stage)
    return STAGES[idx + 1] if idx + 1 < len(STAGES) else None


class SessionManager:
    """Single-writer protocol driver; owns recording start/stop."""

    def __init__(
        self,
        bus: Bus,
        engine: GameEngine,
        clock: Clock,
        out_dir: str = ".",
    ) -> None:
        self.bus = bus
        self.engine = engine
        self.clock = clock
        self.out_dir = str(out_dir)
        self.health = HealthRegistry()
        self.active: SessionRecord | None = None
        self._recorder: Recorder | None = None
        self._session_counter = 0

    # -- lifecycle

    def new_session(
        self,
        condition: str,
        now: Timestamp,
        session_id: str | None = None,
        date: str | None = None,
    ) -> SessionRecord:
        if self.active is not None and self.active.stage != "done":
            raise SessionActive(self.active.session_id)
        if condition not in CONDITIONS:
            raise ValueError(f"unknown condition {condition!r}")
        self._session_counter += 1
        if session_id is None:
            if date is None:
                date = time.strftime("%Y%m%d", time.gmtime())
            session_id = f"{date}-{self._session_counter:03d}"
        record = SessionRecord(session_id, condition)
        record.bag_path = os.path.join(self.out_dir, session_id + BAG_EXTENSION)
        record.stages.append(StageSpan("greetings", now))
        self.active = record
        self._publish_stage(now)
        return record

    def _require_active(self) -> SessionRecord:
        if self.active is None:
            raise SessionError("no active session")
        return self.active

    def _publish_stage(self, stamp: Timestamp) -> None:
        record = self.active
        self.bus.publish(
            TOPIC_STAGE, StageMsg(record.session_id, record.condition, record.stage, stamp), stamp
        )

    def advance(self, to: str, now: Timestamp) -> SessionRecord:
        record = self._require_active()
        current = record.stage
        if to != _successor(current):
            raise IllegalTransition(f"{current} -> {to}")
        record.stages[-1].exit = now
        record.stages.append(StageSpan(to, now))
        if to == "freeplay":
            self._start_recording(now)
            self.engine.set_mode("freeplay")
            self._publish_stage(now)
            self._republish_demographics(now)
            self.engine.publish_snapshot(now)
        elif to == "debriefing":
            self._publish_stage(now)
            self._stop_recording()
            self.engine.set_mode("tutorial")
        elif to == "done":
            self._publish_stage(now)
            self._write_record_file()
            self.bus.publish(TOPIC_RESET, ResetMsg(now), now)
        else:
            self._publish_stage(now)
        return record

    def tick(self, now: Timestamp) -> bool:
        """Auto-advance freeplay once it reaches the 40 minute cap."""
        record = self.active
        if record is not None and record.stage == "freeplay":
            if now - record.stages[-1].enter >= FREEPLAY_CAP_US:
                self.advance("debriefing", now)
                return True
        return False

    # -- recording

    def _start_recording(self, now: Timestamp) -> None:
        record = self._require_active()
        epoch = getattr(self.clock, "wall_epoch_us", 0)
        self._recorder = Recorder(self.bus, record.bag_path, record.session_id, epoch)

    def _stop_recording(self) -> None:
        if self._recorder is not None:
            self._recorder.close()
            self._recorder = None

    @property
    def recording(self) -> bool:
        return self._recorder is not None

    def _republish_demographics(self, stamp: Timestamp) -> None:
        record = self._require_active()
        if record.demographics:
            self.bus.publish(
                TOPIC_DEMOGRAPHICS, self._demographics_msg(stamp), stamp
            )

    def _demographics_msg(self, stamp: Timestamp) -> DemographicsMsg:
        record = self._require_active()
        return DemographicsMsg(
            record.session_id,
            [(d.colour, d.age, d.out_of_range, d.note) for d in record.demographics],
            stamp,
        )

    # -- demographics

    def register_demographics(self, entries: list, now: Timestamp) -> SessionRecord:
        """entries: (colour, age) or (colour, age, note) tuples; greetings only."""
        record = self._require_active()
        if record.stage != "greetings":
            raise WrongStage(f"demographics must be registered during greetings, not {record.stage}")
        for entry in entries:
            colour, age = entry[0], int(entry[1])
            note = entry[2] if len(entry) > 2 else ""
            if colour not in CHILD_COLOURS:
                raise ValueError(f"unknown child colour {colour!r}")
            out_of_range = not (AGE_RANGE[0] <= age <= AGE_RANGE[1])
            record.demographics.append(Demographic(colour, age, out_of_range, note))
        self.bus.publish(TOPIC_DEMOGRAPHICS, self._demographics_msg(now), now)
        return record

    # -- persistence

    def record_file_path(self, record: SessionRecord) -> str:
        return os.path.join(self.out_dir, record.session_id + ".session.txt")

    def _write_record_file(self) -> None:
        record = self._require_active()
        lines = [
            f"session: {record.session_id}",
            f"condition: {record.condition}",
            f"bag: {os.path.basename(record.bag_path)}",
        ]
        for d in record.demographics:
            flag = " out_of_range" if d.out_of_range else ""
            note = f" note={d.note}" if d.note else ""
            lines.append(f"child: {d.colour} age={d.age}{flag}{note}")
        for span in record.stages:
            exit_ = span.exit if span.exit is not None else span.enter
            lines.append(f"stage: {span.stage} {span.enter} {exit_}")
        with open(self.record_file_path(record), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")


def load_record_file(path: str) -> SessionRecord:
    record = SessionRecord("", "child_child")
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or ":" not in line:
                continue
            key, value = line.split(":", 1)
            value = value.strip()
            if key == "session":
                record.session_id = value
            elif key == "condition":
                record.condition = value
            elif key == "bag":
                record.bag_path = value
            elif key == "child":
                parts = value.split()
                colour = parts[0]
                age = int(parts[1].split("=", 1)[1])
                record.demographics.append(
                    Demographic(colour, age, "out_of_range" in parts)
                )
            elif key == "stage":
                stage, enter, exit_ = value.split()
                record.stages.append(StageSpan(stage, int(enter), int(exit_)))
    return record
