"""Canonical message encoding for bus payloads.

Every payload class declares a FIELDS table; the same table drives three
codecs that must stay in lockstep:

  * a fixed-field little-endian binary form used in bag files and for
    state hashing (coordinates as 0.1 mm fixed point so the bytes are
    platform independent),
  * a JSON form used on the gateway socket,
  * equality/repr via plain dataclasses.

Field kinds: "str", "bytes", "bool", "u8", "u16", "u32", "i32", "i64",
"f64", "fp" (fixed-point metres), ("enum", values), ("list", subfields).
List items are tuples in subfield order.
"""

from __future__ import annotations

import base64
import struct
from typing import Any

FP_SCALE = 10_000  # 0.1 mm per unit

#: message-type registry, name -> class (populated by @message)
MESSAGE_TYPES: dict[str, type] = {}


class WireError(Exception):
    pass


def message(cls: type) -> type:
    """Register a payload dataclass (keyed by its class name)."""
    if not hasattr(cls, "FIELDS"):
        raise TypeError(f"{cls.__name__} has no FIELDS table")
    MESSAGE_TYPES[cls.__name__] = cls
    return cls


def schema_name(payload: Any) -> str:
    return type(payload).__name__


def _pack_value(out: bytearray, kind, value) -> None:
    if isinstance(kind, tuple):
        tag, arg = kind
        if tag == "enum":
            try:
                out += struct.pack("<B", arg.index(value))
            except ValueError:
                raise WireError(f"{value!r} not in enum {arg}") from None
            return
        if tag == "list":
            out += struct.pack("<I", len(value))
            for item in value:
                if len(item) != len(arg):
                    raise WireError(f"list item {item!r} does not match {arg}")
                for (_, sub_kind), sub_value in zip(arg, item):
                    _pack_value(out, sub_kind, sub_value)
            return
        raise WireError(f"unknown field kind {kind!r}")
    if kind == "str":
        raw = value.encode("utf-8")
        out += struct.pack("<H", len(raw))
        out += raw
    elif kind == "bytes":
        out += struct.pack("<I", len(value))
        out += value
    elif kind == "bool":
        out += struct.pack("<B", 1 if value else 0)
    elif kind == "u8":
        out += struct.pack("<B", value)
    elif kind == "u16":
        out += struct.pack("<H", value)
    elif kind == "u32":
        out += struct.pack("<I", value)
    elif kind == "i32":
        out += struct.pack("<i", value)
    elif kind == "i64":
        out += struct.pack("<q", value)
    elif kind == "f64":
        out += struct.pack("<d", value)
    elif kind == "fp":
        out += struct.pack("<i", round(value * FP_SCALE))
    else:
        raise WireError(f"unknown field kind {kind!r}")


def _unpack_value(data: bytes, off: int, kind):
    if isinstance(kind, tuple):
        tag, arg = kind
        if tag == "enum":
            (idx,) = struct.unpack_from("<B", data, off)
            if idx >= len(arg):
                raise WireError(f"enum index {idx} out of range for {arg}")
            return arg[idx], off + 1
        if tag == "list":
            (count,) = struct.unpack_from("<I", data, off)
            off += 4
            items = []
            for _ in range(count):
                item = []
                for _, sub_kind in arg:
                    value, off = _unpack_value(data, off, sub_kind)
                    item.append(value)
                items.append(tuple(item))
            return items, off
        raise WireError(f"unknown field kind {kind!r}")
    if kind == "str":
        (n,) = struct.unpack_from("<H", data, off)
        off += 2
        return data[off : off + n].decode("utf-8"), off + n
    if kind == "bytes":
        (n,) = struct.unpack_from("<I", data, off)
        off += 4
        return bytes(data[off : off + n]), off + n
    if kind == "bool":
        (v,) = struct.unpack_from("<B", data, off)
        return bool(v), off + 1
    if kind == "u8":
        return struct.unpack_from("<B", data, off)[0], off + 1
    if kind == "u16":
        return struct.unpack_from("<H", data, off)[0], off + 2
    if kind == "u32":
        return struct.unpack_from("<I", data, off)[0], off + 4
    if kind == "i32":
        return struct.unpack_from("<i", data, off)[0], off + 4
    if kind == "i64":
        return struct.unpack_from("<q", data, off)[0], off + 8
    if kind == "f64":
        return struct.unpack_from("<d", data, off)[0], off + 8
    if kind == "fp":
        (v,) = struct.unpack_from("<i", data, off)
        return v / FP_SCALE, off + 4
    raise WireError(f"unknown field kind {kind!r}")


def pack(payload: Any) -> bytes:
    out = bytearray()
    for name, kind in type(payload).FIELDS:
        try:
            _pack_value(out, kind, getattr(payload, name))
        except struct.error as exc:
            raise WireError(f"field {name!r} of {schema_name(payload)}: {exc}") from None
    return bytes(out)


def unpack(cls: type, data: bytes) -> Any:
    values = {}
    off = 0
    try:
        for name, kind in cls.FIELDS:
            values[name], off = _unpack_value(data, off, kind)
    except struct.error as exc:
        raise WireError(f"truncated {cls.__name__} payload: {exc}") from None
    if off != len(data):
        raise WireError(f"{len(data) - off} trailing bytes after {cls.__name__} payload")
    return cls(**values)


def _json_value(kind, value):
    if isinstance(kind, tuple) and kind[0] == "list":
        return [
            [_json_value(sub_kind, v) for (_, sub_kind), v in zip(kind[1], item)]
            for item in value
        ]
    if kind == "bytes":
        return base64.b64encode(value).decode("ascii")
    return value


def _from_json_value(kind, value):
    if isinstance(kind, tuple):
        tag, arg = kind
        if tag == "enum":
            if value not in arg:
                raise WireError(f"{value!r} not in enum {arg}")
            return value
        if tag == "list":
            items = []
            for item in value:
                if len(item) != len(arg):
                    raise WireError(f"list item {item!r} does not match {arg}")
                items.append(
                    tuple(_from_json_value(sub_kind, v) for (_, sub_kind), v in zip(arg, item))
                )
            return items
    if kind == "bytes":
        return base64.b64decode(value)
    if kind == "bool":
        return bool(value)
    if kind in ("u8", "u16", "u32", "i32", "i64"):
        return int(value)
    if kind in ("f64", "fp"):
        return float(value)
    if kind == "str":
        if not isinstance(value, str):
            raise WireError(f"expected string, got {value!r}")
        return value
    raise WireError(f"unknown field kind {kind!r}")


def to_json(payload: Any) -> dict:
    return {
        name: _json_value(kind, getattr(payload, name)) for name, kind in type(payload).FIELDS
    }


def from_json(cls: type, obj: dict) -> Any:
    try:
        values = {name: _from_json_value(kind, obj[name]) for name, kind in cls.FIELDS}
    except KeyError as exc:
        raise WireError(f"missing field {exc} for {cls.__name__}") from None
    return cls(**values)
