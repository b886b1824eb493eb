"""Rigid 2D/3D transforms and the named-frame transform tree.

The screen plane ("sandtray" frame) is the root coordinate system of the
rig; cameras, the robot and in-game items hang off it as static or
dynamic frames.
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass

from .clock import Timestamp

ROOT_FRAME = "sandtray"
RESERVED_FRAMES = ("sandtray", "robot", "camera_purple", "camera_yellow", "camera_env")

#: dynamic edges keep this much history (microseconds)
DEFAULT_HISTORY_US = 10_000_000


class FrameError(Exception):
    pass


class UnknownFrame(FrameError):
    pass


class DisconnectedFrames(FrameError):
    pass


class NoSampleBefore(FrameError):
    """A dynamic edge has no sample at or before the requested time."""


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    t = math.fmod(theta + math.pi, 2.0 * math.pi)
    if t <= 0.0:
        t += 2.0 * math.pi
    return t - math.pi


@dataclass(frozen=True)
class Transform2D:
    """Rigid transform in the screen plane: rotation then translation."""

    theta: float = 0.0  # radians in (-pi, pi]
    x: float = 0.0  # metres
    y: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", normalize_angle(self.theta))

    @staticmethod
    def identity() -> "Transform2D":
        return Transform2D()

    @staticmethod
    def translation(x: float, y: float) -> "Transform2D":
        return Transform2D(0.0, x, y)

    @staticmethod
    def rotation(theta: float) -> "Transform2D":
        return Transform2D(theta, 0.0, 0.0)

    def apply(self, px: float, py: float) -> tuple[float, float]:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return (c * px - s * py + self.x, s * px + c * py + self.y)

    def compose(self, other: "Transform2D") -> "Transform2D":
        """self ∘ other: apply `other` first, then self."""
        tx, ty = self.apply(other.x, other.y)
        return Transform2D(self.theta + other.theta, tx, ty)

    def invert(self) -> "Transform2D":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return Transform2D(-self.theta, -(c * self.x + s * self.y), -(-s * self.x + c * self.y))


def quat_mul(a: tuple, b: tuple) -> tuple:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_normalize(q: tuple) -> tuple:
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    return (q[0] / n, q[1] / n, q[2] / n, q[3] / n)


def quat_rotate(q: tuple, v: tuple) -> tuple:
    """Rotate vector v by unit quaternion q."""
    w, x, y, z = q
    vx, vy, vz = v
    # q * (0, v) * conj(q), expanded
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return (
        vx + w * tx + (y * tz - z * ty),
        vy + w * ty + (z * tx - x * tz),
        vz + w * tz + (x * ty - y * tx),
    )


@dataclass(frozen=True)
class Transform3D:
    """Rigid transform: unit quaternion (w, x, y, z) plus translation."""

    rotation: tuple = (1.0, 0.0, 0.0, 0.0)
    translation: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", quat_normalize(tuple(self.rotation)))
        object.__setattr__(self, "translation", tuple(self.translation))

    @staticmethod
    def identity() -> "Transform3D":
        return Transform3D()

    @staticmethod
    def from_2d(t: Transform2D) -> "Transform3D":
        half = t.theta / 2.0
        return Transform3D((math.cos(half), 0.0, 0.0, math.sin(half)), (t.x, t.y, 0.0))

    def apply(self, v: tuple) -> tuple:
        rx, ry, rz = quat_rotate(self.rotation, v)
        tx, ty, tz = self.translation
        return (rx + tx, ry + ty, rz + tz)

    def compose(self, other: "Transform3D") -> "Transform3D":
        """self ∘ other: apply `other` first, then self."""
        return Transform3D(
            quat_mul(self.rotation, other.rotation),
            self.apply(other.translation),
        )

    def invert(self) -> "Transform3D":
        w, x, y, z = self.rotation
        conj = (w, -x, -y, -z)
        t = quat_rotate(conj, self.translation)
        return Transform3D(conj, (-t[0], -t[1], -t[2]))


class _Edge:
    __slots__ = ("parent", "static", "samples")

    def __init__(self, parent: str, static: Transform3D | None) -> None:
        self.parent = parent
        self.static = static
        self.samples: list[tuple[Timestamp, Transform3D]] = []


class FrameTree:
    """Named coordinate frames connected by a forest of rigid edges.

    Each edge maps child-frame coordinates into the parent frame. Dynamic
    edges hold a bounded time-ordered sample buffer; lookups use the
    latest sample at or before the query time (zero-order hold). One
    writer, many readers: all published transforms are immutable and
    mutation is serialized by an internal lock.
    """

    def __init__(self, history_us: int = DEFAULT_HISTORY_US) -> None:
        self._edges: dict[str, _Edge] = {}
        self._frames: set[str] = {ROOT_FRAME}
        self._history_us = history_us
        self._lock = threading.Lock()

    @property
    def frames(self) -> set[str]:
        return set(self._frames)

    def attach_static(self, child: str, parent: str, transform: Transform3D) -> None:
        with self._lock:
            self._attach(child, parent, _Edge(parent, transform))

    def attach_dynamic(self, child: str, parent: str) -> None:
        with self._lock:
            self._attach(child, parent, _Edge(parent, None))

    def _attach(self, child: str, parent: str, edge: _Edge) -> None:
        if child == parent:
            raise ValueError(f"frame {child!r} cannot be its own parent")
        existing = self._edges.get(child)
        if existing is not None and existing.parent != parent:
            raise ValueError(f"frame {child!r} already has parent {existing.parent!r}")
        # walking up from parent must not reach child (forest, no cycles)
        cursor = parent
        while cursor in self._edges:
            if cursor == child:
                raise ValueError(f"attaching {child!r} under {parent!r} would create a cycle")
            cursor = self._edges[cursor].parent
        if cursor == child:
            raise ValueError(f"attaching {child!r} under {parent!r} would create a cycle")
        self._edges[child] = edge
        self._frames.add(child)
        self._frames.add(parent)

    def update(self, child: str, transform: Transform3D, stamp: Timestamp) -> None:
        """Publish a new sample for a dynamic edge."""
        with self._lock:
            edge = self._edges.get(child)
            if edge is None:
                raise UnknownFrame(child)
            if edge.static is not None:
                raise ValueError(f"edge {child!r} is static")
            samples = edge.samples
            if samples and stamp < samples[-1][0]:
                bisect.insort(samples, (stamp, transform), key=lambda s: s[0])
            else:
                samples.append((stamp, transform))
            horizon = samples[-1][0] - self._history_us
            drop = 0
            while drop < len(samples) - 1 and samples[drop][0] < horizon:
                drop += 1
            if drop:
                del samples[:drop]

    def _edge_transform(self, child: str, at: Timestamp) -> Transform3D:
        edge = self._edges[child]
        if edge.static is not None:
            return edge.static
        idx = bisect.bisect_right(edge.samples, at, key=lambda s: s[0]) - 1
        if idx < 0:
            raise NoSampleBefore(f"edge {child!r} has no sample at or before t={at}")
        return edge.samples[idx][1]

    def _chain_to_root(self, frame: str, at: Timestamp) -> tuple[str, Transform3D]:
        """Return (root frame, transform mapping `frame` coords to root coords)."""
        acc = Transform3D.identity()
        cursor = frame
        while cursor in self._edges:
            acc = self._edge_transform(cursor, at).compose(acc)
            cursor = self._edges[cursor].parent
        return cursor, acc

    def resolve(self, from_frame: str, to_frame: str, at: Timestamp) -> Transform3D:
        """Transform mapping coordinates in `from_frame` to `to_frame` at time `at`."""
        with self._lock:
            for name in (from_frame, to_frame):
                if name not in self._frames:
                    raise UnknownFrame(name)
            if from_frame == to_frame:
                return Transform3D.identity()
            root_a, t_a = self._chain_to_root(from_frame, at)
            root_b, t_b = self._chain_to_root(to_frame, at)
            if root_a != root_b:
                raise DisconnectedFrames(f"{from_frame!r} and {to_frame!r} are in different trees")
            return t_b.invert().compose(t_a)
