"""Minimal HTTP + WebSocket listener for the browser surfaces.

One asyncio listener serves the static UI files and upgrades `/ws`
connections to WebSocket; each WS client speaks the same newline-
delimited JSON envelopes as the TCP gateway, one line per text message.
Implements just enough of RFC 6455 for browsers: handshake, masked
client frames, fragmentation, ping/pong and close.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import os
import struct

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

OP_CONT = 0x0
OP_TEXT = 0x1
OP_BINARY = 0x2
OP_CLOSE = 0x8
OP_PING = 0x9
OP_PONG = 0xA

CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".mjs": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".map": "application/json",
    ".svg": "image/svg+xml",
    ".png": "image/png",
    ".ico": "image/x-icon",
}


class WsError(Exception):
    pass


def accept_key(client_key: str) -> str:
    digest = hashlib.sha1((client_key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


def encode_frame(payload: bytes, opcode: int = OP_TEXT) -> bytes:
    head = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        head += bytes([n])
    elif n < 1 << 16:
        head += bytes([126]) + struct.pack(">H", n)
    else:
        head += bytes([127]) + struct.pack(">Q", n)
    return head + payload


async def read_frame(reader: asyncio.StreamReader) -> tuple[int, bool, bytes]:
    """One raw frame: (opcode, fin, unmasked payload)."""
    b0, b1 = await reader.readexactly(2)
    fin = bool(b0 & 0x80)
    opcode = b0 & 0x0F
    masked = bool(b1 & 0x80)
    length = b1 & 0x7F
    if length == 126:
        (length,) = struct.unpack(">H", await reader.readexactly(2))
    elif length == 127:
        (length,) = struct.unpack(">Q", await reader.readexactly(8))
    mask = await reader.readexactly(4) if masked else b""
    payload = await reader.readexactly(length)
    if masked:
        payload = bytes(v ^ mask[i % 4] for i, v in enumerate(payload))
    return opcode, fin, payload


async def read_message(reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> str | None:
    """Next complete text message; None once the peer closes."""
    buffer = b""
    expecting_cont = False
    while True:
        try:
            opcode, fin, payload = await read_frame(reader)
        except (asyncio.IncompleteReadError, ConnectionError):
            return None
        if opcode == OP_CLOSE:
            try:
                writer.write(encode_frame(payload[:2], OP_CLOSE))
                await writer.drain()
            except ConnectionError:
                pass
            return None
        if opcode == OP_PING:
            writer.write(encode_frame(payload, OP_PONG))
            await writer.drain()
            continue
        if opcode == OP_PONG:
            continue
        if opcode in (OP_TEXT, OP_BINARY):
            if expecting_cont:
                raise WsError("new message while expecting continuation")
            buffer = payload
            expecting_cont = not fin
        elif opcode == OP_CONT:
            if not expecting_cont:
                raise WsError("continuation without start frame")
            buffer += payload
            expecting_cont = not fin
        else:
            raise WsError(f"unsupported opcode {opcode}")
        if not expecting_cont:
            return buffer.decode("utf-8")


def _parse_request(raw: bytes) -> tuple[str, str, dict]:
    text = raw.decode("latin-1")
    lines = text.split("\r\n")
    method, path, _ = lines[0].split(" ", 2)
    headers: dict[str, str] = {}
    for line in lines[1:]:
        if ":" in line:
            key, value = line.split(":", 1)
            headers[key.strip().lower()] = value.strip()
    return method, path, headers


def _http_response(status: str, body: bytes, content_type: str = "text/plain") -> bytes:
    return (
        f"HTTP/1.1 {status}\r\n"
        f"Content-Type: {content_type}\r\n"
        f"Content-Length: {len(body)}\r\n"
        "Cache-Control: no-store\r\n"
        "Connection: close\r\n\r\n"
    ).encode("ascii") + body


class WebBridge:
    """Static files + /ws WebSocket endpoint feeding a line handler."""

    def __init__(self, root_dir: str | None, on_ws_client) -> None:
        # on_ws_client(send_line) -> (on_line, on_close)
        self.root_dir = os.path.abspath(root_dir) if root_dir else None
        self._on_ws_client = on_ws_client
        self._server: asyncio.AbstractServer | None = None
        self.port = 0

    async def start(self, port: int = 0, host: str = "127.0.0.1") -> int:
        self._server = await asyncio.start_server(self._handle, host, port)
        self.port = self._server.sockets[0].getsockname()[1]
        return self.port

    async def stop(self) -> None:
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        try:
            raw = await asyncio.wait_for(reader.readuntil(b"\r\n\r\n"), 10)
        except (asyncio.IncompleteReadError, asyncio.TimeoutError, ConnectionError):
            writer.close()
            return
        try:
            method, path, headers = _parse_request(raw)
        except ValueError:
            writer.write(_http_response("400 Bad Request", b"bad request"))
            writer.close()
            return
        if headers.get("upgrade", "").lower() == "websocket":
            await self._serve_ws(reader, writer, headers)
        else:
            self._serve_file(writer, method, path)
            try:
                await writer.drain()
            except ConnectionError:
                pass
            writer.close()

    # -- websocket side

    async def _serve_ws(self, reader, writer, headers) -> None:
        key = headers.get("sec-websocket-key")
        if not key:
            writer.write(_http_response("400 Bad Request", b"missing websocket key"))
            writer.close()
            return
        writer.write(
            (
                "HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\n"
                "Connection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {accept_key(key)}\r\n\r\n"
            ).encode("ascii")
        )
        await writer.drain()

        def send_line(line: str) -> None:
            if not writer.is_closing():
                writer.write(encode_frame(line.encode("utf-8")))

        on_line, on_close = self._on_ws_client(send_line)
        try:
            while True:
                message = await read_message(reader, writer)
                if message is None:
                    break
                for line in message.splitlines():
                    if line:
                        on_line(line)
                await writer.drain()
        except (WsError, ConnectionError):
            pass
        finally:
            on_close()
            writer.close()

    # -- static side

    def _serve_file(self, writer, method: str, path: str) -> None:
        if method != "GET" or self.root_dir is None:
            writer.write(_http_response("404 Not Found", b"not found"))
            return
        clean = path.split("?", 1)[0]
        if clean == "/":
            clean = "/index.html"
        target = os.path.abspath(os.path.join(self.root_dir, clean.lstrip("/")))
        if not target.startswith(self.root_dir + os.sep) or not os.path.isfile(target):
            writer.write(_http_response("404 Not Found", b"not found"))
            return
        ext = os.path.splitext(target)[1].lower()
        with open(target, "rb") as fh:
            body = fh.read()
        writer.write(_http_response("200 OK", body, CONTENT_TYPES.get(ext, "application/octet-stream")))
