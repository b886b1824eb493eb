"""Scripted sessions: a text DSL standing in for live children.

A script supplies header directives and timed play events; the runner
drives the whole acquisition protocol around them (greetings with
demographics, tutorial, free play containing the scripted events,
debriefing, done) on a virtual clock and records a bag.

Directives (before any timed line):

    child <purple|yellow> <age>
    condition <child_child|child_robot>
    seed <int>            enable the autonomous policy with this seed
    pause <seconds>       policy cool-down between moves
    speed <m/s>           robot drag speed
    calib identity | calib <theta> <tx> <ty>
    end <seconds>         free-play length (default: last event + 1 s)

Timed events, non-decreasing times in seconds relative to free-play
start:

    at <t> tool <source> <drag|draw> [colour]
    at <t> touch <source> <down|move|up> <x> <y> [touch_id]
    at <t> robot move <item> <x> <y>
    at <t> robot say <text...>
    at <t> robot point <x> <y>
    at <t> robot gaze <target>
    at <t> blob <name> <bytes>

Sources: purple, yellow, wizard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .app import BlobMsg, SandboxApp, TOPIC_BLOB_PREFIX
from .bus import Bus
from .clock import VirtualClock, micros
from .engine import TOPIC_TOOLS, TOPIC_TOUCHES, ToolSelect, TouchEvent, snapshot_hash
from .frames import Transform2D
from .planner import GoalOccupied, NoPath
from .robot import BusyItem, Calibration, RobotAction

SOURCE_ALIASES = {
    "purple": "child_purple",
    "yellow": "child_yellow",
    "wizard": "wizard",
}

_SOURCE_TOUCH_IDS = {"child_purple": 1, "child_yellow": 2, "wizard": 3}


class ScriptParseError(Exception):
    pass


@dataclass
class ScriptCommand:
    stamp: int  # relative to free-play start
    kind: str
    args: tuple


@dataclass
class ScriptedSession:
    children: list = field(default_factory=list)  # (colour, age)
    condition: str = "child_child"
    seed: int | None = None
    pause_s: float | None = None
    speed: float | None = None
    calibration: Transform2D | None = Transform2D.identity()
    end_us: int | None = None
    commands: list = field(default_factory=list)


def _parse_error(lineno: int, why: str) -> ScriptParseError:
    return ScriptParseError(f"line {lineno}: {why}")


def parse_script(text: str) -> ScriptedSession:
    script = ScriptedSession()
    last_stamp = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "child":
                if parts[1] not in ("purple", "yellow"):
                    raise _parse_error(lineno, f"unknown child colour {parts[1]!r}")
                script.children.append((parts[1], int(parts[2])))
            elif parts[0] == "condition":
                if parts[1] not in ("child_child", "child_robot"):
                    raise _parse_error(lineno, f"unknown condition {parts[1]!r}")
                script.condition = parts[1]
            elif parts[0] == "seed":
                script.seed = int(parts[1])
            elif parts[0] == "pause":
                script.pause_s = float(parts[1])
            elif parts[0] == "speed":
                script.speed = float(parts[1])
            elif parts[0] == "calib":
                if parts[1] == "identity":
                    script.calibration = Transform2D.identity()
                else:
                    script.calibration = Transform2D(float(parts[1]), float(parts[2]), float(parts[3]))
            elif parts[0] == "end":
                script.end_us = micros(float(parts[1]))
            elif parts[0] == "at":
                stamp = micros(float(parts[1]))
                if stamp < last_stamp:
                    raise _parse_error(lineno, "timestamps must be non-decreasing")
                last_stamp = stamp
                script.commands.append(_parse_command(stamp, parts[2:], lineno))
            else:
                raise _parse_error(lineno, f"unknown directive {parts[0]!r}")
        except ScriptParseError:
            raise
        except (KeyError, ValueError, IndexError):
            raise _parse_error(lineno, f"cannot parse {raw.strip()!r}") from None
    return script


def _parse_command(stamp: int, parts: list, lineno: int) -> ScriptCommand:
    kind = parts[0]
    if kind == "tool":
        source = SOURCE_ALIASES[parts[1]]
        tool = parts[2]
        if tool not in ("drag", "draw"):
            raise _parse_error(lineno, f"unknown tool {tool!r}")
        colour = int(parts[3]) if len(parts) > 3 else 7
        return ScriptCommand(stamp, "tool", (source, tool, colour))
    if kind == "touch":
        source = SOURCE_ALIASES[parts[1]]
        phase = parts[2]
        if phase not in ("down", "move", "up"):
            raise _parse_error(lineno, f"unknown phase {phase!r}")
        x, y = float(parts[3]), float(parts[4])
        touch_id = int(parts[5]) if len(parts) > 5 else _SOURCE_TOUCH_IDS[source]
        return ScriptCommand(stamp, "touch", (touch_id, phase, x, y, source))
    if kind == "robot":
        verb = parts[1]
        if verb == "move":
            return ScriptCommand(stamp, "robot_move", (parts[2], float(parts[3]), float(parts[4])))
        if verb == "say":
            return ScriptCommand(stamp, "robot_say", (" ".join(parts[2:]),))
        if verb == "point":
            return ScriptCommand(stamp, "robot_point", (float(parts[2]), float(parts[3])))
        if verb == "gaze":
            return ScriptCommand(stamp, "robot_gaze", (parts[2],))
        raise _parse_error(lineno, f"unknown robot verb {verb!r}")
    if kind == "blob":
        return ScriptCommand(stamp, "blob", (parts[1], parts[2].encode("utf-8")))
    raise _parse_error(lineno, f"unknown command {kind!r}")


# protocol prologue beats, relative to session start
_GREETINGS_AT = 0
_TUTORIAL_AT = 2_000_000
_FREEPLAY_AT = 4_000_000
_TICK_US = 500_000


@dataclass
class ScriptRun:
    session_id: str
    bag_path: str
    record_path: str
    final_hash: int
    events_published: int
    freeplay_duration_us: int


def run_script(
    text: str,
    out_dir: str = ".",
    session_id: str = "scripted-001",
    scene: str | None = None,
) -> ScriptRun:
    """Run a script headless on a virtual clock, recording a bag."""
    script = parse_script(text)
    clock = VirtualClock(0, wall_epoch_us=0)
    kwargs = {"clock": clock, "out_dir": out_dir}
    if scene is not None:
        kwargs["scene"] = scene
    if script.speed is not None:
        kwargs["robot_speed"] = script.speed
    app = SandboxApp(**kwargs)
    if script.calibration is not None:
        app.robot.set_calibration(Calibration(script.calibration, 0.0, 3))
    if script.seed is not None:
        pause_us = micros(script.pause_s) if script.pause_s is not None else None
        if pause_us is None:
            app.enable_policy(script.seed)
        else:
            app.enable_policy(script.seed, pause_us)

    published = 0

    def count_tap(event):
        nonlocal published
        published += 1

    app.bus.attach_tap(count_tap)

    session = app.session.new_session(script.condition, clock.now(), session_id=session_id)
    if script.children:
        app.session.register_demographics(script.children, clock.now())
    clock.advance_to(_TUTORIAL_AT)
    app.session.advance("tutorial", clock.now())
    clock.advance_to(_FREEPLAY_AT)
    app.session.advance("freeplay", clock.now())
    t0 = clock.now()

    if script.end_us is not None:
        end_at = t0 + script.end_us
    elif script.commands:
        end_at = t0 + script.commands[-1].stamp + 1_000_000
    else:
        end_at = t0 + 1_000_000

    def advance_sim(target: int) -> bool:
        """Advance the virtual clock in tick steps; True if freeplay ended.

        Stops at every pending schedule step so fake touches publish at
        their exact stamps (keeps per-topic stamps monotone)."""
        while True:
            now = clock.now()
            if app.session.active.stage != "freeplay":
                return True
            nxt = min(target, now + _TICK_US)
            due = app.robot.runner.next_due()
            if due is not None:
                nxt = min(nxt, max(due, now))
            clock.advance_to(nxt)
            app.tick(clock.now())
            if clock.now() >= target:
                return app.session.active.stage != "freeplay"

    ended = False
    for command in script.commands:
        at = t0 + command.stamp
        if at >= end_at:
            break
        ended = advance_sim(at)
        if ended:
            break
        _apply_command(app, command, clock.now())
    if not ended:
        advance_sim(end_at)
    if app.session.active.stage == "freeplay":
        app.robot.runner.cancel_all(clock.now())
        app.session.advance("debriefing", clock.now())
    final_hash = snapshot_hash(app.engine.state)  # state as of end of recording
    clock.advance_to(end_at + 1_000_000)
    app.session.advance("done", clock.now())

    freeplay_us = session.freeplay_duration_us() or 0
    return ScriptRun(
        session_id,
        session.bag_path,
        app.session.record_file_path(session),
        final_hash,
        published,
        freeplay_us,
    )


def _apply_command(app: SandboxApp, command: ScriptCommand, now: int) -> None:
    if command.kind == "tool":
        source, tool, colour = command.args
        app.bus.publish(TOPIC_TOOLS, ToolSelect(source, tool, colour, now), now)
    elif command.kind == "touch":
        touch_id, phase, x, y, source = command.args
        app.bus.publish(TOPIC_TOUCHES, TouchEvent(touch_id, phase, x, y, source, now), now)
    elif command.kind == "robot_move":
        item_id, x, y = command.args
        try:
            app.robot.execute(RobotAction("move_item", now, "wizard", item_id=item_id, x=x, y=y))
        except (NoPath, GoalOccupied, BusyItem):
            pass  # scripted move impossible right now; keep the session going
    elif command.kind == "robot_say":
        app.robot.execute(RobotAction("say", now, "wizard", text=command.args[0]))
    elif command.kind == "robot_point":
        x, y = command.args
        app.robot.execute(RobotAction("point_at", now, "wizard", x=x, y=y))
    elif command.kind == "robot_gaze":
        app.robot.execute(RobotAction("gaze_at", now, "wizard", target=command.args[0]))
    elif command.kind == "blob":
        name, data = command.args
        app.bus.publish(TOPIC_BLOB_PREFIX + name, BlobMsg(name, data, now), now)
