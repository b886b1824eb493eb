"""Offline analysis of recorded bags.

analyze() is a pure function of the bag bytes: it feeds the recorded
event stream through the same analytics pipeline the live system runs
and renders a fixed-order tab-separated report (diff-able golden files).
"""

from __future__ import annotations

import os

from .analytics import GameAnalytics
from .bag import BAG_EXTENSION, BagReader
from .clock import Timestamp
from .engine import StateTracker
from .session import load_record_file


def state_at(reader: BagReader, t: Timestamp | None = None) -> StateTracker:
    """Game state reconstructed from all events stamped at or before t."""
    tracker = StateTracker(scene="")
    for event in reader.events():
        if t is not None and event.stamp > t:
            break
        tracker.handle(event)
    return tracker


def analyze(reader: BagReader) -> str:
    analytics = GameAnalytics(bus=None)
    tracker = StateTracker(scene="")
    freeplay_enter = None
    freeplay_exit = None
    for event in reader.events():
        tracker.handle(event)
        if event.topic.startswith("game/"):
            analytics.handle(event)
        elif event.topic == "session/stage":
            if event.payload.stage == "freeplay":
                freeplay_enter = event.stamp
            elif event.payload.stage == "debriefing":
                freeplay_exit = event.stamp

    lines = ["# transitions"]
    for t in analytics.transitions:
        lines.append(f"{t.stamp}\t{t.item_id}\t{t.from_zone}\t{t.to_zone}")
    lines.append("# proximity")
    for p in analytics.proximity:
        lines.append(
            f"{p.stamp}\t{p.item_a}\t{p.item_b}\t{p.distance_before:.4f}\t{p.distance_after:.4f}"
        )
    lines.append("# moves")
    for item_id in sorted(analytics.move_counts):
        lines.append(f"{item_id}\t{analytics.move_counts[item_id]}")
    lines.append("# session")
    if freeplay_enter is not None and freeplay_exit is not None:
        duration = (freeplay_exit - freeplay_enter) / 1_000_000
        lines.append(f"freeplay_duration_s\t{duration:.3f}")
    lines.append(f"final_hash\t{tracker.hash():016x}")
    return "\n".join(lines) + "\n"


def collect_session_records(directory: str) -> list:
    """Load every *.session.txt record next to the bags in a directory."""
    records = []
    for name in sorted(os.listdir(directory)):
        if name.endswith(".session.txt"):
            records.append(load_record_file(os.path.join(directory, name)))
    return records


def stats_report(records: list, bin_width_minutes: float) -> str:
    from .annotation import duration_stats

    stats = duration_stats(records, bin_width_minutes)
    lines = []
    for condition in sorted(stats):
        s = stats[condition]
        lines.append(f"# {condition}")
        lines.append(f"n\t{s.n}")
        mean = f"{s.mean_min:.3f}" if s.mean_min is not None else "undefined"
        sd = f"{s.sd_min:.3f}" if s.sd_min is not None else "undefined"
        lines.append(f"mean_min\t{mean}")
        lines.append(f"sd_min\t{sd}")
        for bin_start in sorted(s.histogram):
            lines.append(f"bin\t{bin_start:g}\t{s.histogram[bin_start]}")
    if not lines:
        lines = ["# no sessions"]
    return "\n".join(lines) + "\n"
