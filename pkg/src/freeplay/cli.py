"""`sandbox` command-line surface.

    sandbox run SCRIPT --out BAG            scripted headless session -> bag
    sandbox analyze BAG [--out REPORT]      analytics report from a bag
    sandbox stats BAGDIR --bin-min N        per-condition duration stats
    sandbox info FILE                       bag header / index summary
    sandbox replay FILE [--speed S] [--seek T]
    sandbox record --out FILE [--duration S]
    sandbox robot --policy asocial --seed N [--steps K]
    sandbox serve [--port P] [--bags DIR]

Exit codes: 0 success, 2 corrupt/unparseable input.
"""

from __future__ import annotations

import argparse
import os
import sys

from .analyze import analyze, collect_session_records, stats_report
from .bag import BagReader, CorruptBag, SeekPastEnd, info, replay
from .bus import Bus
from .clock import VirtualClock, micros
from .engine import SceneError
from .script import ScriptParseError, run_script

EXIT_CORRUPT = 2


def _cmd_run(args) -> int:
    try:
        with open(args.script, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    out_dir, session_id = args.out_dir, args.session_id
    if args.out:
        out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
        session_id = os.path.splitext(os.path.basename(args.out))[0]
    os.makedirs(out_dir, exist_ok=True)
    scene = None
    if args.scene:
        try:
            with open(args.scene, encoding="utf-8") as fh:
                scene = fh.read()
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CORRUPT
    try:
        run = run_script(text, out_dir=out_dir, session_id=session_id, scene=scene)
    except (ScriptParseError, SceneError) as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    print(f"bag: {run.bag_path}")
    print(f"events: {run.events_published}")
    print(f"freeplay_s: {run.freeplay_duration_us / 1e6:.3f}")
    print(f"final_hash: {run.final_hash:016x}")
    return 0


def _cmd_analyze(args) -> int:
    try:
        report = analyze(BagReader(args.bag))
    except CorruptBag as exc:
        print(f"corrupt bag: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report)
    else:
        sys.stdout.write(report)
    return 0


def _cmd_stats(args) -> int:
    records = collect_session_records(args.bagdir)
    sys.stdout.write(stats_report(records, args.bin_min))
    return 0


def _cmd_info(args) -> int:
    try:
        sys.stdout.write(info(BagReader(args.bag)))
    except CorruptBag as exc:
        print(f"corrupt bag: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    return 0


def _cmd_replay(args) -> int:
    try:
        reader = BagReader(args.bag)
    except CorruptBag as exc:
        print(f"corrupt bag: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    bus = Bus()
    counts: dict[str, int] = {}

    def tap(event):
        counts[event.topic] = counts.get(event.topic, 0) + 1

    bus.attach_tap(tap)
    seek_to = micros(args.seek) if args.seek is not None else None
    try:
        total = replay(reader, bus, speed=args.speed, seek_to=seek_to)
    except SeekPastEnd as exc:
        print(f"seek past end: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    for topic in sorted(counts):
        print(f"{topic}\t{counts[topic]}")
    print(f"total\t{total}")
    return 0


def _cmd_record(args) -> int:
    # Desk-scale live recording: boots the full app, runs the protocol
    # around an idle free-play window of the requested duration.
    from .app import SandboxApp

    clock = VirtualClock(0)
    out_dir = os.path.dirname(os.path.abspath(args.out)) or "."
    os.makedirs(out_dir, exist_ok=True)
    session_id = os.path.splitext(os.path.basename(args.out))[0]
    app = SandboxApp(clock=clock, out_dir=out_dir)
    app.session.new_session(args.condition, clock.now(), session_id=session_id)
    app.session.advance("tutorial", clock.advance(1_000_000))
    app.session.advance("freeplay", clock.advance(1_000_000))
    end = clock.now() + micros(args.duration)
    while clock.now() < end:
        clock.advance(500_000)
        app.tick()
    if app.session.active.stage == "freeplay":
        app.session.advance("debriefing", clock.now())
    app.session.advance("done", clock.advance(1_000_000))
    print(f"bag: {app.session.active.bag_path}")
    return 0


def _cmd_robot(args) -> int:
    import tempfile

    from .app import SandboxApp
    from .robot import Calibration
    from .frames import Transform2D

    if args.policy == "none":
        print("policy disabled; nothing to do")
        return 0
    clock = VirtualClock(0)
    app = SandboxApp(clock=clock, out_dir=tempfile.mkdtemp(prefix="sandbox-robot-"))
    app.robot.set_calibration(Calibration(Transform2D.identity(), 0.0, 3))
    app.enable_policy(args.seed, pause_us=micros(args.pause))
    app.session.new_session("child_robot", clock.now(), session_id="robot-demo")
    app.session.advance("tutorial", clock.advance(1_000_000))
    app.session.advance("freeplay", clock.advance(1_000_000))

    last_stamp = 0

    def tap(event):
        nonlocal last_stamp
        last_stamp = max(last_stamp, event.stamp)

    app.bus.attach_tap(tap)
    actions = 0
    while actions < args.steps:
        clock.advance_to(max(clock.now(), last_stamp) + micros(args.pause))
        action = app.robot.policy_step(app.policy, clock.now())
        if action is not None:
            actions += 1
            print(f"{action.stamp}\tmove_item\t{action.item_id}\t{action.x:.3f}\t{action.y:.3f}")
        app.robot.runner.drain()
        clock.advance_to(last_stamp)
    return 0


def _cmd_serve(args) -> int:
    from .gateway import serve

    return serve(
        port=args.port,
        bags_dir=args.bags,
        condition=args.condition,
        seed=args.seed,
        policy=args.policy,
        robot_speed=args.robot_speed,
        http_port=args.http_port,
        web_root=args.web_root,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sandbox", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scripted session headless and record a bag")
    p.add_argument("script")
    p.add_argument("--out", default=None, help="bag path (overrides --out-dir/--session-id)")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--session-id", default="scripted-001")
    p.add_argument("--scene", default=None, help="scene description file")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("analyze", help="emit the analytics report for a bag")
    p.add_argument("bag")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_analyze)

    p = sub.add_parser("stats", help="per-condition free-play duration statistics")
    p.add_argument("bagdir")
    p.add_argument("--bin-min", type=float, default=5.0)
    p.set_defaults(fn=_cmd_stats)

    p = sub.add_parser("info", help="bag summary")
    p.add_argument("bag")
    p.set_defaults(fn=_cmd_info)

    p = sub.add_parser("replay", help="replay a bag onto a fresh bus")
    p.add_argument("bag")
    p.add_argument("--speed", type=float, default=0.0)
    p.add_argument("--seek", type=float, default=None, help="seek point, seconds")
    p.set_defaults(fn=_cmd_replay)

    p = sub.add_parser("record", help="record an idle live session (desk-scale)")
    p.add_argument("--out", required=True)
    p.add_argument("--duration", type=float, default=10.0, help="free-play seconds")
    p.add_argument("--condition", default="child_child")
    p.set_defaults(fn=_cmd_record)

    p = sub.add_parser("robot", help="run the autonomous policy headless")
    p.add_argument("--policy", choices=("asocial", "none"), default="asocial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--pause", type=float, default=15.0, help="policy cool-down, seconds")
    p.set_defaults(fn=_cmd_robot)

    p = sub.add_parser("serve", help="gateway server for the UI surfaces")
    p.add_argument("--port", type=int, default=7350)
    p.add_argument("--bags", default=None, help="directory of recorded bags")
    p.add_argument("--condition", default="child_child")
    p.add_argument("--policy", choices=("asocial", "none"), default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--robot-speed", type=float, default=0.05, help="drag speed, m/s")
    p.add_argument("--http-port", type=int, default=None,
                   help="also serve the browser surfaces (static files + /ws bridge)")
    p.add_argument("--web-root", default=None, help="frontend directory to serve")
    p.set_defaults(fn=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
