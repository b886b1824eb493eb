"""Three-axis interval coding of social interactions, agreement and stats.

Each child is coded on three mutually exclusive axes: task engagement,
social engagement (stages of play applied at micro-sequence level) and
social attitude. Inter-coder agreement is Cohen's kappa over fixed-width
time slots; session duration statistics mirror the per-condition
histograms used to compare baselines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .clock import Timestamp
from .wire import message

AXES = ("task_engagement", "social_engagement", "social_attitude")

CONSTRUCTS = {
    "task_engagement": ("goal_oriented", "aimless", "adult_seeking"),
    "social_engagement": ("solitary", "onlooker", "parallel", "associative", "cooperative"),
    "social_attitude": ("prosocial", "adversarial", "assertive", "passive", "frustrated"),
}

CHILDREN = ("purple", "yellow")

#: explicit slot label for instants no interval covers
UNCODED = "uncoded"

DEFAULT_SLOT_WIDTH_US = 100_000

TOPIC_ANNOT_ADD = "annot/add"


class AnnotationError(Exception):
    pass


class InvertedInterval(AnnotationError):
    pass


class InvalidConstruct(AnnotationError):
    pass


class EmptyOverlap(AnnotationError):
    pass


@message
@dataclass(frozen=True)
class AnnotationMsg:
    coder: str
    child: str
    axis: str
    value: str
    start: Timestamp
    end: Timestamp
    stamp: Timestamp

    FIELDS = (
        ("coder", "str"),
        ("child", ("enum", CHILDREN)),
        ("axis", ("enum", AXES)),
        ("value", "str"),
        ("start", "i64"),
        ("end", "i64"),
        ("stamp", "i64"),
    )


@dataclass(frozen=True)
class Interval:
    child: str
    axis: str
    value: str
    start: Timestamp
    end: Timestamp  # half-open [start, end)


def _validate(child: str, axis: str, value: str) -> None:
    if child not in CHILDREN:
        raise AnnotationError(f"unknown child {child!r}")
    if axis not in AXES:
        raise AnnotationError(f"unknown axis {axis!r}")
    if value not in CONSTRUCTS[axis]:
        raise InvalidConstruct(f"{value!r} is not a {axis} construct")


class AnnotationTrack:
    """One coder's intervals, mutually exclusive per (child, axis).

    Overlaps resolve last-coder-wins: an existing interval starting
    before the new one is truncated at the new start; an existing
    interval starting inside the new one is dropped (its tail is
    superseded, not split).
    """

    def __init__(self, coder: str) -> None:
        self.coder = coder
        self._lanes: dict[tuple[str, str], list[Interval]] = {}

    def add(self, child: str, axis: str, value: str, start: Timestamp, end: Timestamp) -> Interval:
        _validate(child, axis, value)
        if start >= end:
            raise InvertedInterval(f"[{start}, {end})")
        lane = self._lanes.setdefault((child, axis), [])
        kept = []
        for old in lane:
            if old.end <= start or old.start >= end:
                kept.append(old)
            elif old.start < start:
                kept.append(Interval(old.child, old.axis, old.value, old.start, start))
            # else: superseded entirely
        interval = Interval(child, axis, value, start, end)
        kept.append(interval)
        kept.sort(key=lambda i: i.start)
        self._lanes[(child, axis)] = kept
        return interval

    def add_interval(self, interval: Interval) -> Interval:
        return self.add(interval.child, interval.axis, interval.value, interval.start, interval.end)

    def intervals(self, child: str | None = None, axis: str | None = None) -> list[Interval]:
        out = []
        for (c, a), lane in sorted(self._lanes.items()):
            if (child is None or c == child) and (axis is None or a == axis):
                out.extend(lane)
        return out

    def code_at(self, child: str, axis: str, t: Timestamp) -> str | None:
        for interval in self._lanes.get((child, axis), ()):
            if interval.start <= t < interval.end:
                return interval.value
        return None

    def span(self, child: str, axis: str) -> tuple[Timestamp, Timestamp] | None:
        lane = self._lanes.get((child, axis))
        if not lane:
            return None
        return lane[0].start, max(i.end for i in lane)

    # -- interchange: one line per interval, tab-separated

    def export_lines(self) -> list[str]:
        return [
            f"{self.coder}\t{i.child}\t{i.axis}\t{i.value}\t{i.start}\t{i.end}"
            for i in self.intervals()
        ]


def export_tracks(tracks: list) -> str:
    lines = []
    for track in tracks:
        lines.extend(track.export_lines())
    return "\n".join(lines) + ("\n" if lines else "")


def import_tracks(text: str) -> dict:
    """Parse the tab-separated interval dump back into tracks by coder."""
    tracks: dict[str, AnnotationTrack] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise AnnotationError(f"line {lineno}: expected 6 tab-separated fields")
        coder, child, axis, value, start, end = parts
        track = tracks.setdefault(coder, AnnotationTrack(coder))
        track.add(child, axis, value, int(start), int(end))
    return tracks


@dataclass(frozen=True)
class AgreementReport:
    axis: str
    kappa: float
    p_observed: float
    p_expected: float
    slots: int
    slot_width_us: int


def kappa(
    track_a: AnnotationTrack,
    track_b: AnnotationTrack,
    axis: str,
    child: str,
    slot_width_us: int = DEFAULT_SLOT_WIDTH_US,
) -> AgreementReport:
    """Cohen's kappa between two coders over fixed-width slots.

    The shared span is the intersection of both coders' coverage for
    (child, axis); each slot is labelled by the construct at its centre,
    with uncoded instants as an explicit category.
    """
    if slot_width_us <= 0:
        raise ValueError("slot width must be positive")
    span_a = track_a.span(child, axis)
    span_b = track_b.span(child, axis)
    if span_a is None or span_b is None:
        raise EmptyOverlap(f"one coder has no {axis} intervals for {child}")
    start = max(span_a[0], span_b[0])
    end = min(span_a[1], span_b[1])
    slots = int((end - start) // slot_width_us) if end > start else 0
    if slots == 0:
        raise EmptyOverlap(f"coders do not share a span on {axis}/{child}")

    counts_a: dict[str, int] = {}
    counts_b: dict[str, int] = {}
    agree = 0
    for i in range(slots):
        centre = start + i * slot_width_us + slot_width_us // 2
        label_a = track_a.code_at(child, axis, centre) or UNCODED
        label_b = track_b.code_at(child, axis, centre) or UNCODED
        counts_a[label_a] = counts_a.get(label_a, 0) + 1
        counts_b[label_b] = counts_b.get(label_b, 0) + 1
        if label_a == label_b:
            agree += 1

    p_o = agree / slots
    p_e = sum(
        (counts_a.get(label, 0) / slots) * (counts_b.get(label, 0) / slots)
        for label in sorted(set(counts_a) | set(counts_b))
    )
    if p_e == 1.0:
        value = 1.0 if p_o == 1.0 else 0.0
    else:
        value = (p_o - p_e) / (1.0 - p_e)
    return AgreementReport(axis, value, p_o, p_e, slots, slot_width_us)


@dataclass
class ConditionStats:
    condition: str
    n: int = 0
    mean_min: float | None = None
    sd_min: float | None = None
    histogram: dict = field(default_factory=dict)  # bin start (minutes) -> count


def duration_stats(records: list, bin_width_minutes: float) -> dict:
    """Free-play durations binned per condition, with mean and sample sd.

    `records` are SessionRecords (only those with a closed freeplay stage
    count). Mean/sd are None when undefined (no sessions / single session).
    """
    if bin_width_minutes <= 0:
        raise ValueError("bin width must be positive")
    per_condition: dict[str, list[float]] = {}
    for record in records:
        duration_us = record.freeplay_duration_us()
        if duration_us is None:
            continue
        per_condition.setdefault(record.condition, []).append(duration_us / 60e6)
    out: dict[str, ConditionStats] = {}
    for condition, minutes in sorted(per_condition.items()):
        stats = ConditionStats(condition, n=len(minutes))
        for m in minutes:
            bin_start = math.floor(m / bin_width_minutes) * bin_width_minutes
            stats.histogram[bin_start] = stats.histogram.get(bin_start, 0) + 1
        stats.mean_min = sum(minutes) / len(minutes)
        if len(minutes) >= 2:
            mean = stats.mean_min
            stats.sd_min = math.sqrt(sum((m - mean) ** 2 for m in minutes) / (len(minutes) - 1))
        out[condition] = stats
    return out


class AnnotationStore:
    """Multi-coder store fed by annot/add bus events."""

    def __init__(self) -> None:
        self.tracks: dict[str, AnnotationTrack] = {}

    def track(self, coder: str) -> AnnotationTrack:
        if coder not in self.tracks:
            self.tracks[coder] = AnnotationTrack(coder)
        return self.tracks[coder]

    def apply(self, msg: AnnotationMsg) -> Interval:
        return self.track(msg.coder).add(msg.child, msg.axis, msg.value, msg.start, msg.end)

    def export(self) -> str:
        return export_tracks([self.tracks[c] for c in sorted(self.tracks)])

    def import_(self, text: str) -> None:
        self.tracks = import_tracks(text)
