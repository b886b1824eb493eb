import os
import subprocess
import sys

import pytest

from freeplay.analyze import analyze, collect_session_records, stats_report
from freeplay.bag import BagReader
from freeplay.script import ScriptParseError, parse_script, run_script

DATA = os.path.join(os.path.dirname(__file__), "data")

# frozen at first build from tests/data/golden.script
GOLDEN_HASH = 0xF2D9D11B85DC4C40


def golden_text():
    with open(os.path.join(DATA, "golden.script"), encoding="utf-8") as fh:
        return fh.read()


def golden_report_bytes():
    with open(os.path.join(DATA, "golden_report.txt"), "rb") as fh:
        return fh.read()


class TestParse:
    def test_directives_and_commands(self):
        script = parse_script(
            "child purple 5\n"
            "condition child_robot\n"
            "speed 0.1\n"
            "at 1.0 touch purple down 0.1 0.1\n"
            "at 2.0 robot move croc 0.5 0.2\n"
        )
        assert script.children == [("purple", 5)]
        assert script.condition == "child_robot"
        assert len(script.commands) == 2
        assert script.commands[0].stamp == 1_000_000

    def test_decreasing_time_rejected(self):
        with pytest.raises(ScriptParseError):
            parse_script("at 2.0 touch purple down 0.1 0.1\nat 1.0 touch purple up 0.1 0.1\n")

    def test_unknown_directive_rejected(self):
        with pytest.raises(ScriptParseError):
            parse_script("frobnicate 12\n")

    def test_bad_touch_phase_rejected(self):
        with pytest.raises(ScriptParseError):
            parse_script("at 1.0 touch purple wiggle 0.1 0.1\n")

    def test_comments_and_blanks_ignored(self):
        script = parse_script("\n# hello\nat 1.0 touch purple down 0.1 0.1  # mid\n")
        assert len(script.commands) == 1


class TestRunScript:
    def test_empty_script_bag_has_only_bookkeeping_events(self, tmp_path):
        run = run_script("", out_dir=str(tmp_path), session_id="empty")
        reader = BagReader(run.bag_path)
        # stage events plus the start-of-recording state snapshot; no play
        assert set(reader.index) <= {
            "session/stage", "game/items", "game/strokes", "game/background",
            "analysis/zones",
        }
        assert "game/touches" not in reader.index
        stages = [e.payload.stage for e in reader.events() if e.topic == "session/stage"]
        assert stages == ["freeplay", "debriefing"]

    def test_single_drag_event_accounting(self, tmp_path):
        script = (
            "at 1.0 touch purple down 0.30 0.16\n"
            "at 2.0 touch purple move 0.40 0.20\n"
            "at 3.0 touch purple up 0.40 0.20\n"
        )
        run = run_script(script, out_dir=str(tmp_path), session_id="drag")
        reader = BagReader(run.bag_path)
        assert reader.index["game/touches"].count == 3
        # pose trail: one snapshot state + move + up updates
        item_events = [e.payload for e in reader.events() if e.topic == "game/items"]
        ball_updates = [e for e in item_events if e.item_id == "ball" and not e.snapshot]
        assert len(ball_updates) == 2
        assert reader.index["game/moves"].count == 1

    def test_golden_script_hash(self, tmp_path):
        run = run_script(golden_text(), out_dir=str(tmp_path), session_id="golden")
        assert run.final_hash == GOLDEN_HASH

    def test_forty_minute_cap_enforced(self, tmp_path):
        script = "end 3000\nat 1.0 touch purple down 0.30 0.16\nat 2.0 touch purple up 0.30 0.16\n"
        run = run_script(script, out_dir=str(tmp_path), session_id="cap")
        assert abs(run.freeplay_duration_us - 2400 * 1_000_000) <= 1_000_000

    def test_blob_streams_recorded(self, tmp_path):
        script = (
            "at 1.0 blob camera_purple frame-0001\n"
            "at 2.0 blob camera_purple frame-0002\n"
            "at 2.0 blob audio chunk-a\n"
        )
        run = run_script(script, out_dir=str(tmp_path), session_id="blobs")
        reader = BagReader(run.bag_path)
        assert reader.index["blob/camera_purple"].count == 2
        assert reader.index["blob/audio"].count == 1
        payloads = [e.payload.data for e in reader.events() if e.topic == "blob/camera_purple"]
        assert payloads == [b"frame-0001", b"frame-0002"]


class TestAnalyze:
    def test_golden_report_byte_identical(self, tmp_path):
        run = run_script(golden_text(), out_dir=str(tmp_path), session_id="golden")
        report = analyze(BagReader(run.bag_path))
        assert report.encode() == golden_report_bytes()

    def test_analyze_pure_function_of_bytes(self, tmp_path):
        run = run_script(golden_text(), out_dir=str(tmp_path), session_id="golden")
        a = analyze(BagReader(run.bag_path))
        b = analyze(BagReader(run.bag_path))
        assert a == b

    def test_analyze_of_resaved_copy_identical(self, tmp_path):
        run = run_script(golden_text(), out_dir=str(tmp_path), session_id="golden")
        copy = str(tmp_path / "copy.fpbag")
        BagReader(run.bag_path).save(copy)
        assert analyze(BagReader(copy)) == analyze(BagReader(run.bag_path))

    def test_empty_bag_empty_sections(self, tmp_path):
        run = run_script("", out_dir=str(tmp_path), session_id="empty")
        report = analyze(BagReader(run.bag_path))
        assert "# transitions\n# proximity\n# moves\n# session" in report


class TestStats:
    def test_collect_and_report(self, tmp_path):
        run_script("end 600\n", out_dir=str(tmp_path), session_id="s1")
        run_script("end 1200\ncondition child_robot\n", out_dir=str(tmp_path), session_id="s2")
        records = collect_session_records(str(tmp_path))
        assert len(records) == 2
        report = stats_report(records, 5.0)
        assert "# child_child" in report
        assert "# child_robot" in report
        assert "mean_min\t10.000" in report
        assert "mean_min\t20.000" in report


class TestCli:
    def run_cli(self, *args):
        return subprocess.run(
            [sys.executable, "-m", "freeplay.cli", *args],
            capture_output=True,
            text=True,
            timeout=120,
        )

    def test_run_analyze_info_round_trip(self, tmp_path):
        script_path = str(tmp_path / "s.script")
        with open(script_path, "w") as fh:
            fh.write("at 1.0 touch purple down 0.30 0.16\nat 2.0 touch purple up 0.35 0.18\n")
        out = self.run_cli("run", script_path, "--out-dir", str(tmp_path), "--session-id", "cli1")
        assert out.returncode == 0, out.stderr
        bag = str(tmp_path / "cli1.fpbag")
        assert os.path.exists(bag)

        out = self.run_cli("info", bag)
        assert out.returncode == 0
        assert "session: cli1" in out.stdout

        report_path = str(tmp_path / "report.txt")
        out = self.run_cli("analyze", bag, "--out", report_path)
        assert out.returncode == 0
        assert os.path.exists(report_path)

        out = self.run_cli("replay", bag)
        assert out.returncode == 0
        assert "total" in out.stdout

        out = self.run_cli("stats", str(tmp_path), "--bin-min", "5")
        assert out.returncode == 0
        assert "child_child" in out.stdout

    def test_corrupt_input_exit_code_2(self, tmp_path):
        bogus = str(tmp_path / "bogus.fpbag")
        with open(bogus, "wb") as fh:
            fh.write(b"this is not a bag")
        assert self.run_cli("info", bogus).returncode == 2
        assert self.run_cli("analyze", bogus).returncode == 2

        bad_script = str(tmp_path / "bad.script")
        with open(bad_script, "w") as fh:
            fh.write("at 5 touch purple down 0.1 0.1\nat 1 touch purple up 0.1 0.1\n")
        assert self.run_cli("run", bad_script, "--out-dir", str(tmp_path)).returncode == 2

    def test_robot_policy_cli(self):
        out = self.run_cli("robot", "--policy", "asocial", "--seed", "3", "--steps", "2", "--pause", "1.0")
        assert out.returncode == 0
        assert out.stdout.count("move_item") == 2

    def test_record_cli_produces_indexed_bag(self, tmp_path):
        bag = str(tmp_path / "live.fpbag")
        out = self.run_cli("record", "--out", bag, "--duration", "3")
        assert out.returncode == 0, out.stderr
        reader = BagReader(bag)
        assert reader.had_footer
        stages = [e.payload.stage for e in reader.events() if e.topic == "session/stage"]
        assert stages == ["freeplay", "debriefing"]


class TestCliRunOut:
    def test_out_flag_sets_bag_path(self, tmp_path):
        import subprocess

        script_path = str(tmp_path / "s.script")
        with open(script_path, "w") as fh:
            fh.write("at 1.0 touch purple down 0.30 0.16\nat 2.0 touch purple up 0.30 0.16\n")
        bag = str(tmp_path / "custom-name.fpbag")
        out = subprocess.run(
            [sys.executable, "-m", "freeplay.cli", "run", script_path, "--out", bag],
            capture_output=True, text=True, timeout=120,
        )
        assert out.returncode == 0, out.stderr
        assert os.path.exists(bag)
        reader = BagReader(bag)
        assert reader.session_id == "custom-name"

    def test_scene_flag_loads_custom_scene(self, tmp_path):
        import subprocess

        script_path = str(tmp_path / "s.script")
        with open(script_path, "w") as fh:
            fh.write("at 1.0 touch purple down 0.10 0.10\nat 2.0 touch purple up 0.20 0.20\n")
        scene_path = str(tmp_path / "scene.txt")
        with open(scene_path, "w") as fh:
            fh.write("background 1\nsolo object 0.10 0.10 0.04 0.04 1\n")
        out = subprocess.run(
            [sys.executable, "-m", "freeplay.cli", "run", script_path,
             "--out-dir", str(tmp_path), "--session-id", "custom-scene",
             "--scene", scene_path],
            capture_output=True, text=True, timeout=120,
        )
        assert out.returncode == 0, out.stderr
        reader = BagReader(str(tmp_path / "custom-scene.fpbag"))
        items = {e.payload.item_id for e in reader.events() if e.topic == "game/items"}
        assert items == {"solo"}

    def test_bad_scene_exit_code_2(self, tmp_path):
        import subprocess

        script_path = str(tmp_path / "s.script")
        with open(script_path, "w") as fh:
            fh.write("")
        scene_path = str(tmp_path / "bad.txt")
        with open(scene_path, "w") as fh:
            fh.write("nonsense here\n")
        out = subprocess.run(
            [sys.executable, "-m", "freeplay.cli", "run", script_path,
             "--out-dir", str(tmp_path), "--scene", scene_path],
            capture_output=True, text=True, timeout=120,
        )
        assert out.returncode == 2
