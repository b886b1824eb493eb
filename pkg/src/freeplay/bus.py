"""In-process typed pub/sub bus.

Topics are declared with a payload schema before use. Publishing from any
thread is serialized by an internal lock into a single ordered dispatch
stream; subscribers run inline on that stream and must hand off heavy
work. Recorder taps see every event before subscribers.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Any, Callable

from .clock import Timestamp


class BusError(Exception):
    pass


class UndeclaredTopic(BusError):
    pass


class SchemaMismatch(BusError):
    pass


class RejectedOutOfOrder(BusError):
    """Stamp is older than the last event published on the same topic."""


@dataclass(frozen=True)
class Event:
    topic: str
    stamp: Timestamp
    seq: int  # per-topic monotone counter
    payload: Any


Subscriber = Callable[[Event], None]


class Bus:
    def __init__(self) -> None:
        self._schemas: dict[str, type] = {}
        self._subs: dict[str, list[Subscriber]] = {}
        self._taps: list[Subscriber] = []
        self._last_stamp: dict[str, Timestamp] = {}
        self._seq: dict[str, int] = {}
        self._lock = threading.RLock()

    def declare(self, topic: str, schema: type) -> None:
        with self._lock:
            existing = self._schemas.get(topic)
            if existing is not None and existing is not schema:
                raise BusError(f"topic {topic!r} already declared with {existing.__name__}")
            self._schemas[topic] = schema

    def schema(self, topic: str) -> type:
        try:
            return self._schemas[topic]
        except KeyError:
            raise UndeclaredTopic(topic) from None

    @property
    def topics(self) -> dict[str, type]:
        return dict(self._schemas)

    def subscribe(self, pattern: str, fn: Subscriber) -> None:
        """Subscribe to a topic, a `prefix/*` pattern, or `*` for everything."""
        with self._lock:
            self._subs.setdefault(pattern, []).append(fn)

    def unsubscribe(self, pattern: str, fn: Subscriber) -> None:
        with self._lock:
            subs = self._subs.get(pattern, [])
            if fn in subs:
                subs.remove(fn)

    def attach_tap(self, fn: Subscriber) -> None:
        with self._lock:
            self._taps.append(fn)

    def detach_tap(self, fn: Subscriber) -> None:
        with self._lock:
            if fn in self._taps:
                self._taps.remove(fn)

    def _matching_subs(self, topic: str) -> list[Subscriber]:
        out = list(self._subs.get(topic, ()))
        for pattern, fns in self._subs.items():
            if pattern == "*" or (pattern.endswith("/*") and topic.startswith(pattern[:-1])):
                out.extend(fns)
        return out

    def publish(self, topic: str, payload: Any, stamp: Timestamp) -> Event:
        with self._lock:
            schema = self.schema(topic)
            if not isinstance(payload, schema):
                raise SchemaMismatch(
                    f"topic {topic!r} expects {schema.__name__}, got {type(payload).__name__}"
                )
            last = self._last_stamp.get(topic)
            if last is not None and stamp < last:
                raise RejectedOutOfOrder(f"topic {topic!r}: stamp {stamp} < last stamp {last}")
            self._last_stamp[topic] = stamp
            seq = self._seq.get(topic, 0)
            self._seq[topic] = seq + 1
            event = Event(topic, stamp, seq, payload)
            for tap in self._taps:
                tap(event)
            for fn in self._matching_subs(topic):
                fn(event)
            return event
