"""Session time base.

All timestamps are integer microseconds since the session epoch (the
instant the recorder / app was started). Integer micros keep event
ordering exact and make bag files byte-reproducible.
"""

from __future__ import annotations

import time

Timestamp = int  # microseconds since session epoch

US_PER_SECOND = 1_000_000


def micros(seconds: float) -> Timestamp:
    return round(seconds * US_PER_SECOND)


def to_seconds(stamp: Timestamp) -> float:
    return stamp / US_PER_SECOND


class Clock:
    """Time source driving the bus, engine and session manager."""

    def now(self) -> Timestamp:
        raise NotImplementedError

    @property
    def wall_epoch_us(self) -> int:
        """Wall-clock time (unix microseconds) of the session epoch."""
        raise NotImplementedError


class SystemClock(Clock):
    """Monotonic clock anchored so that now() == 0 at construction."""

    def __init__(self) -> None:
        self._t0_ns = time.monotonic_ns()
        self._wall_epoch_us = time.time_ns() // 1000

    def now(self) -> Timestamp:
        return (time.monotonic_ns() - self._t0_ns) // 1000

    @property
    def wall_epoch_us(self) -> int:
        return self._wall_epoch_us


class VirtualClock(Clock):
    """Manually driven clock for scripted runs and deterministic replay.

    Never moves backwards; advance_to() with an older stamp is a no-op so
    interleaved drivers (script events, timers) can all push it forward.
    """

    def __init__(self, start: Timestamp = 0, wall_epoch_us: int = 0) -> None:
        self._now = int(start)
        self._wall_epoch_us = wall_epoch_us

    def now(self) -> Timestamp:
        return self._now

    def advance_to(self, stamp: Timestamp) -> Timestamp:
        if stamp > self._now:
            self._now = int(stamp)
        return self._now

    def advance(self, delta_us: int) -> Timestamp:
        return self.advance_to(self._now + delta_us)

    @property
    def wall_epoch_us(self) -> int:
        return self._wall_epoch_us
