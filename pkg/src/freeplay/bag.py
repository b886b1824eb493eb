"""Append-only indexed event log (.fpbag) with deterministic replay.

Layout (all little-endian):

  header   magic "FPSB" | u16 version | u64 epoch wall-clock µs | str session id
  records  u32 len | u16 topic-id | u64 stamp | u32 seq | payload bytes
           (len counts everything after itself; topic-id 0xFFFF is a
           topic-declaration record: u16 id | str name | str schema)
  footer   "FPIX" | u32 body len | body | u64 footer offset | "FPND"

Strings are u16-length-prefixed UTF-8. Records are kept ordered by
(stamp, topic name, seq); the writer holds a small reorder window so
same-instant bursts from different topics land sorted while the file
still streams to disk. A crash before close() leaves an index-less bag
whose footer is rebuilt by scanning the frames.
"""

from __future__ import annotations

import errno
import heapq
import io
import struct
import time
from dataclasses import dataclass

from .bus import Bus, Event
from .clock import Timestamp
from .wire import MESSAGE_TYPES, pack, schema_name, unpack

MAGIC = b"FPSB"
INDEX_MAGIC = b"FPIX"
END_MAGIC = b"FPND"
FORMAT_VERSION = 1
CONTROL_TOPIC_ID = 0xFFFF
BAG_EXTENSION = ".fpbag"

#: events older than the newest by this much are flushed to disk
REORDER_WINDOW_US = 1_000_000


class BagError(Exception):
    pass


class CorruptBag(BagError):
    pass


class SeekPastEnd(BagError):
    pass


class IoFailure(BagError):
    pass


class OutOfSpace(IoFailure):
    pass


def _wrap_io(exc: OSError) -> IoFailure:
    if exc.errno == errno.ENOSPC:
        return OutOfSpace(str(exc))
    return IoFailure(str(exc))


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def _read_str(buf: bytes, off: int) -> tuple[str, int]:
    (n,) = struct.unpack_from("<H", buf, off)
    off += 2
    return buf[off : off + n].decode("utf-8"), off + n


@dataclass(frozen=True)
class Frame:
    """One on-disk record (data or topic declaration)."""

    topic_id: int
    stamp: Timestamp
    seq: int
    payload: bytes

    def encode(self) -> bytes:
        body = struct.pack("<HQI", self.topic_id, self.stamp, self.seq) + self.payload
        return struct.pack("<I", len(body)) + body


@dataclass(frozen=True)
class TopicInfo:
    topic_id: int
    name: str
    schema: str
    count: int = 0
    first_stamp: int = 0
    last_stamp: int = 0


class BagWriter:
    def __init__(self, path: str, session_id: str, epoch_wall_us: int = 0) -> None:
        self.path = str(path)
        self.session_id = session_id
        self.epoch_wall_us = epoch_wall_us
        self._topic_ids: dict[str, int] = {}
        self._schemas: dict[str, str] = {}
        self._declared: set[str] = set()
        self._index: dict[int, list] = {}  # id -> [count, first, last, [offsets]]
        self._pending: list = []  # heap of (stamp, topic name, seq, payload bytes, schema)
        self._counter = 0
        self._closed = False
        try:
            self._fh = open(self.path, "wb")
            self._fh.write(
                MAGIC
                + struct.pack("<HQ", FORMAT_VERSION, epoch_wall_us)
                + _pack_str(session_id)
            )
        except OSError as exc:
            raise _wrap_io(exc) from None

    # -- event intake

    def append(self, event: Event) -> None:
        if self._closed:
            raise BagError("writer is closed")
        payload = pack(event.payload)
        self._counter += 1
        heapq.heappush(
            self._pending,
            (event.stamp, event.topic, event.seq, self._counter, payload, schema_name(event.payload)),
        )
        horizon = event.stamp - REORDER_WINDOW_US
        while self._pending and self._pending[0][0] < horizon:
            self._write_next()

    def _write_next(self) -> None:
        stamp, topic, seq, _, payload, schema = heapq.heappop(self._pending)
        topic_id = self._topic_ids.get(topic)
        if topic_id is None:
            topic_id = len(self._topic_ids)
            self._topic_ids[topic] = topic_id
            self._schemas[topic] = schema
            decl = struct.pack("<H", topic_id) + _pack_str(topic) + _pack_str(schema)
            self._write_frame(Frame(CONTROL_TOPIC_ID, stamp, 0, decl))
            self._index[topic_id] = [0, stamp, stamp, []]
        entry = self._index[topic_id]
        offset = self._fh.tell()
        self._write_frame(Frame(topic_id, stamp, seq, payload))
        if entry[0] == 0:
            entry[1] = stamp
        entry[0] += 1
        entry[2] = stamp
        entry[3].append(offset)

    def _write_frame(self, frame: Frame) -> None:
        try:
            self._fh.write(frame.encode())
        except OSError as exc:
            raise _wrap_io(exc) from None

    def flush(self) -> None:
        try:
            self._fh.flush()
        except OSError as exc:
            raise _wrap_io(exc) from None

    def close(self) -> None:
        if self._closed:
            return
        while self._pending:
            self._write_next()
        body = bytearray()
        body += struct.pack("<I", len(self._topic_ids))
        names = {tid: name for name, tid in self._topic_ids.items()}
        for tid in sorted(names):
            name = names[tid]
            count, first, last, offsets = self._index[tid]
            body += struct.pack("<H", tid)
            body += _pack_str(name)
            body += _pack_str(self._schemas[name])
            body += struct.pack("<IQQ", count, first, last)
            body += struct.pack(f"<{count}Q", *offsets)
        try:
            footer_off = self._fh.tell()
            self._fh.write(INDEX_MAGIC + struct.pack("<I", len(body)) + bytes(body))
            self._fh.write(struct.pack("<Q", footer_off) + END_MAGIC)
            self._fh.close()
        except OSError as exc:
            raise _wrap_io(exc) from None
        self._closed = True


class Recorder:
    """Bus tap that streams every published event into a bag."""

    def __init__(self, bus: Bus, path: str, session_id: str, epoch_wall_us: int = 0) -> None:
        self.writer = BagWriter(path, session_id, epoch_wall_us)
        self._bus = bus
        bus.attach_tap(self.writer.append)

    def close(self) -> None:
        self._bus.detach_tap(self.writer.append)
        self.writer.close()


@dataclass(frozen=True)
class BagRecord:
    topic: str
    stamp: Timestamp
    seq: int
    payload_bytes: bytes
    schema: str

    def decode(self):
        cls = MESSAGE_TYPES.get(self.schema)
        if cls is None:
            raise CorruptBag(f"unknown schema {self.schema!r}")
        return unpack(cls, self.payload_bytes)


class BagReader:
    """Loaded bag: header fields, raw frames, decoded record view."""

    def __init__(self, path: str) -> None:
        self.path = str(path)
        try:
            with open(self.path, "rb") as fh:
                blob = fh.read()
        except OSError as exc:
            raise _wrap_io(exc) from None
        self._parse(blob)

    def _parse(self, blob: bytes) -> None:
        if len(blob) < 16 or blob[:4] != MAGIC:
            raise CorruptBag("bad magic")
        (self.version, self.epoch_wall_us) = struct.unpack_from("<HQ", blob, 4)
        if self.version != FORMAT_VERSION:
            raise CorruptBag(f"unsupported version {self.version}")
        try:
            self.session_id, off = _read_str(blob, 14)
        except (struct.error, IndexError, UnicodeDecodeError) as exc:
            raise CorruptBag(f"bad header: {exc}") from None
        self._header_end = off

        footer_off = None
        if len(blob) >= off + 12 and blob[-4:] == END_MAGIC:
            (candidate,) = struct.unpack_from("<Q", blob, len(blob) - 12)
            if off <= candidate < len(blob) and blob[candidate : candidate + 4] == INDEX_MAGIC:
                footer_off = candidate
        self.had_footer = footer_off is not None
        self.footer_offset = footer_off
        frames_end = footer_off if footer_off is not None else len(blob)

        self.frames: list[Frame] = []
        self._frame_offsets: list[int] = []
        cursor = off
        while cursor < frames_end:
            if cursor + 4 > frames_end:
                if self.had_footer:
                    raise CorruptBag("truncated record inside indexed bag")
                break  # crash tail: tolerate a partial trailing frame
            (length,) = struct.unpack_from("<I", blob, cursor)
            if cursor + 4 + length > frames_end:
                if self.had_footer:
                    raise CorruptBag("record overruns file")
                break
            topic_id, stamp, seq = struct.unpack_from("<HQI", blob, cursor + 4)
            payload = blob[cursor + 18 : cursor + 4 + length]
            self.frames.append(Frame(topic_id, stamp, seq, payload))
            self._frame_offsets.append(cursor)
            cursor += 4 + length

        # topic table from declaration frames (authoritative even when the
        # footer exists; the footer must agree)
        self._topic_names: dict[int, str] = {}
        self._topic_schemas: dict[int, str] = {}
        for frame in self.frames:
            if frame.topic_id == CONTROL_TOPIC_ID:
                (tid,) = struct.unpack_from("<H", frame.payload, 0)
                name, p = _read_str(frame.payload, 2)
                schema, _ = _read_str(frame.payload, p)
                self._topic_names[tid] = name
                self._topic_schemas[tid] = schema

        self.index = self.build_index()
        if self.had_footer:
            stored = self._parse_footer(blob, footer_off)
            if stored != self.index:
                raise CorruptBag("footer index does not match records")

    def _parse_footer(self, blob: bytes, footer_off: int) -> dict:
        (body_len,) = struct.unpack_from("<I", blob, footer_off + 4)
        off = footer_off + 8
        end = off + body_len
        if end > len(blob):
            raise CorruptBag("footer overruns file")
        (ntopics,) = struct.unpack_from("<I", blob, off)
        off += 4
        stored: dict[str, TopicIndex] = {}
        for _ in range(ntopics):
            (tid,) = struct.unpack_from("<H", blob, off)
            off += 2
            name, off = _read_str(blob, off)
            schema, off = _read_str(blob, off)
            count, first, last = struct.unpack_from("<IQQ", blob, off)
            off += 20
            offsets = list(struct.unpack_from(f"<{count}Q", blob, off))
            off += 8 * count
            stored[name] = TopicIndex(tid, name, schema, count, first, last, offsets)
        return stored

    def build_index(self) -> dict:
        """Recompute the per-topic index by scanning the loaded frames."""
        index: dict[str, TopicIndex] = {}
        for frame, offset in zip(self.frames, self._frame_offsets):
            if frame.topic_id == CONTROL_TOPIC_ID:
                continue
            name = self._topic_names.get(frame.topic_id)
            if name is None:
                raise CorruptBag(f"record references undeclared topic id {frame.topic_id}")
            entry = index.get(name)
            if entry is None:
                entry = TopicIndex(
                    frame.topic_id, name, self._topic_schemas[frame.topic_id],
                    0, frame.stamp, frame.stamp, [],
                )
                index[name] = entry
            entry.count += 1
            entry.last_stamp = frame.stamp
            entry.offsets.append(offset)
        return index

    # -- views

    def records(self):
        for frame in self.frames:
            if frame.topic_id == CONTROL_TOPIC_ID:
                continue
            name = self._topic_names[frame.topic_id]
            yield BagRecord(
                name, frame.stamp, frame.seq, frame.payload, self._topic_schemas[frame.topic_id]
            )

    def events(self):
        for record in self.records():
            yield Event(record.topic, record.stamp, record.seq, record.decode())

    @property
    def record_count(self) -> int:
        return sum(entry.count for entry in self.index.values())

    @property
    def time_bounds(self) -> tuple[Timestamp, Timestamp] | None:
        stamps = [
            (entry.first_stamp, entry.last_stamp) for entry in self.index.values() if entry.count
        ]
        if not stamps:
            return None
        return min(s for s, _ in stamps), max(e for _, e in stamps)

    def save(self, path: str) -> None:
        """Re-serialize; loading then saving a bag is byte-identical."""
        writer = BagWriter(path, self.session_id, self.epoch_wall_us)
        try:
            # bypass the reorder buffer: frames are already in stored order
            for frame in self.frames:
                if frame.topic_id == CONTROL_TOPIC_ID:
                    (tid,) = struct.unpack_from("<H", frame.payload, 0)
                    name, p = _read_str(frame.payload, 2)
                    schema, _ = _read_str(frame.payload, p)
                    writer._topic_ids[name] = tid
                    writer._schemas[name] = schema
                    writer._index[tid] = [0, frame.stamp, frame.stamp, []]
                    writer._write_frame(frame)
                else:
                    entry = writer._index[frame.topic_id]
                    offset = writer._fh.tell()
                    writer._write_frame(frame)
                    if entry[0] == 0:
                        entry[1] = frame.stamp
                    entry[0] += 1
                    entry[2] = frame.stamp
                    entry[3].append(offset)
        finally:
            writer.close()


class TopicIndex:
    __slots__ = ("topic_id", "name", "schema", "count", "first_stamp", "last_stamp", "offsets")

    def __init__(self, topic_id, name, schema, count, first_stamp, last_stamp, offsets):
        self.topic_id = topic_id
        self.name = name
        self.schema = schema
        self.count = count
        self.first_stamp = first_stamp
        self.last_stamp = last_stamp
        self.offsets = offsets

    def __eq__(self, other) -> bool:
        return isinstance(other, TopicIndex) and all(
            getattr(self, slot) == getattr(other, slot) for slot in self.__slots__
        )

    def __repr__(self) -> str:
        return (
            f"TopicIndex({self.topic_id}, {self.name!r}, {self.schema!r}, "
            f"{self.count}, {self.first_stamp}, {self.last_stamp})"
        )


def declare_bag_topics(reader: BagReader, bus: Bus) -> None:
    for entry in reader.index.values():
        cls = MESSAGE_TYPES.get(entry.schema)
        if cls is None:
            raise CorruptBag(f"unknown schema {entry.schema!r}")
        bus.declare(entry.name, cls)


def replay(
    reader: BagReader,
    bus: Bus,
    speed: float = 0.0,
    seek_to: Timestamp | None = None,
    sleep=time.sleep,
) -> int:
    """Re-publish every recorded event on its original topic, in order.

    `speed` scales inter-event delays (0 = as fast as possible). With
    `seek_to`, every event stamped at or before it is applied instantly
    before normal pacing resumes.
    """
    if speed < 0:
        raise ValueError("speed must be >= 0")
    bounds = reader.time_bounds
    if seek_to is not None:
        if bounds is None or seek_to > bounds[1]:
            raise SeekPastEnd(f"seek to {seek_to} beyond bag end")
    declare_bag_topics(reader, bus)
    count = 0
    prev_stamp = None
    for record in reader.records():
        paced = speed > 0 and (seek_to is None or record.stamp > seek_to)
        if paced and prev_stamp is not None and record.stamp > prev_stamp:
            sleep((record.stamp - prev_stamp) / 1_000_000 / speed)
        if seek_to is None or record.stamp > seek_to:
            prev_stamp = record.stamp
        bus.publish(record.topic, record.decode(), record.stamp)
        count += 1
    return count


def info(reader: BagReader) -> str:
    """Human-readable summary used by the CLI."""
    out = io.StringIO()
    out.write(f"session: {reader.session_id}\n")
    out.write(f"version: {reader.version}\n")
    out.write(f"epoch_wall_us: {reader.epoch_wall_us}\n")
    out.write(f"records: {reader.record_count}\n")
    bounds = reader.time_bounds
    if bounds:
        out.write(f"start_us: {bounds[0]}\n")
        out.write(f"end_us: {bounds[1]}\n")
        out.write(f"duration_s: {(bounds[1] - bounds[0]) / 1_000_000:.3f}\n")
    out.write(f"indexed: {'yes' if reader.had_footer else 'no (rebuilt by scan)'}\n")
    out.write("topics:\n")
    for name in sorted(reader.index):
        entry = reader.index[name]
        out.write(f"  {name}  {entry.schema}  count={entry.count}\n")
    return out.getvalue()
