"""Gateway socket for the UI surfaces.

One TCP client per surface (play surface, WoZ console, dashboard,
annotation tool) exchanging newline-delimited JSON envelopes
{topic, stamp, payload} that mirror the bus schemas. Control verbs use
reserved topics starting with "_":

  _sub            {"topics": [pattern, ...]}        subscribe to bus topics
  _snapshot       {}                                full live game/session state
  _bags           {}                                recorded bag inventory
  _seek           {"bag": name, "t": micros}        replayed state at t
  _advance        {"to": stage}                     protocol transition
  _new_session    {"condition": c}                  open a session
  _demographics   {"entries": [[colour, age], ..]}  register demographics
  _restart        {"module": name}                  bump a module epoch
  _annot_export   {}                                interval dump (TSV)
  _annot_import   {"text": tsv}                     replace annotation tracks
  _annot_tracks   {}                                tracks as JSON intervals

Replies are _ok / _err envelopes carrying the request verb in "re".
Everything else must be a declared bus topic; payloads are validated
against the topic schema and re-stamped with the server clock.
"""

from __future__ import annotations

import asyncio
import base64
import json
import os
import sys

from .analyze import state_at
from .app import SandboxApp
from .bag import BAG_EXTENSION, BagReader
from .bus import BusError, Event
from .clock import Timestamp
from .planner import PlannerError
from .robot import RobotError, WozCommandMsg, TOPIC_WOZ
from .session import SessionError, TOPIC_HEALTH
from .wire import WireError, from_json, to_json

TICK_INTERVAL_S = 0.05
HEALTH_INTERVAL_S = 1.0


def _envelope(topic: str, stamp: Timestamp, payload: dict) -> bytes:
    return (json.dumps({"topic": topic, "stamp": stamp, "payload": payload}) + "\n").encode()


class _Client:
    """One connected UI surface (TCP line socket or WebSocket)."""

    def __init__(self) -> None:
        self.patterns: list[str] = []

    def wants(self, topic: str) -> bool:
        for pattern in self.patterns:
            if pattern == "*" or pattern == topic:
                return True
            if pattern.endswith("/*") and topic.startswith(pattern[:-1]):
                return True
        return False

    def send(self, data: bytes) -> None:
        raise NotImplementedError

    def close(self) -> None:
        pass


class _TcpClient(_Client):
    def __init__(self, writer: asyncio.StreamWriter) -> None:
        super().__init__()
        self.writer = writer

    def send(self, data: bytes) -> None:
        if not self.writer.is_closing():
            self.writer.write(data)

    def close(self) -> None:
        self.writer.close()


class _WsClient(_Client):
    def __init__(self, send_line) -> None:
        super().__init__()
        self._send_line = send_line

    def send(self, data: bytes) -> None:
        self._send_line(data.decode("utf-8"))


class GatewayServer:
    def __init__(
        self,
        app: SandboxApp,
        port: int = 0,
        bags_dir: str | None = None,
    ) -> None:
        self.app = app
        self.port = port
        self.bags_dir = bags_dir
        self.clients: set[_Client] = set()
        self._server: asyncio.AbstractServer | None = None
        self._web = None
        self._readers: dict[str, BagReader] = {}
        self._tick_task: asyncio.Task | None = None
        self.app.bus.subscribe("*", self._on_bus_event)

    # -- bus -> clients

    def _on_bus_event(self, event: Event) -> None:
        if not self.clients:
            return
        data = _envelope(event.topic, event.stamp, to_json(event.payload))
        for client in self.clients:
            if client.wants(event.topic):
                client.send(data)

    # -- lifecycle

    async def start(self) -> int:
        self._server = await asyncio.start_server(self._handle_client, "127.0.0.1", self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        self._tick_task = asyncio.ensure_future(self._tick_loop())
        return self.port

    async def start_web(self, http_port: int = 0, web_root: str | None = None) -> int:
        """Serve the browser surfaces: static files plus a /ws bridge."""
        from .webbridge import WebBridge

        self._web = WebBridge(web_root, self._ws_client_factory)
        return await self._web.start(http_port)

    def _ws_client_factory(self, send_line):
        client = _WsClient(send_line)
        self.clients.add(client)

        def on_line(line: str) -> None:
            try:
                self._handle_line(client, line.encode("utf-8"))
            except Exception as exc:  # keep the surface connected
                client.send(_envelope("_err", self.app.clock.now(), {
                    "re": "?", "error": type(exc).__name__, "detail": str(exc),
                }))

        def on_close() -> None:
            self.clients.discard(client)

        return on_line, on_close

    async def stop(self) -> None:
        if self._tick_task is not None:
            self._tick_task.cancel()
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
        if self._web is not None:
            await self._web.stop()
        for client in list(self.clients):
            client.close()

    async def _tick_loop(self) -> None:
        last_health = 0.0
        loop = asyncio.get_event_loop()
        while True:
            self.app.tick()
            now_wall = loop.time()
            if now_wall - last_health >= HEALTH_INTERVAL_S:
                last_health = now_wall
                now = self.app.clock.now()
                self.app.bus.publish(TOPIC_HEALTH, self.app.session.health.to_msg(now), now)
            for client in list(self.clients):
                if isinstance(client, _TcpClient):
                    try:
                        await client.writer.drain()
                    except ConnectionError:
                        pass
            await asyncio.sleep(TICK_INTERVAL_S)

    async def _handle_client(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        client = _TcpClient(writer)
        self.clients.add(client)
        try:
            while True:
                line = await reader.readline()
                if not line:
                    break
                try:
                    self._handle_line(client, line)
                except Exception as exc:  # keep the surface connected
                    client.send(_envelope("_err", self.app.clock.now(), {
                        "re": "?", "error": type(exc).__name__, "detail": str(exc),
                    }))
                await writer.drain()
        except ConnectionError:
            pass
        finally:
            self.clients.discard(client)
            writer.close()

    # -- client -> bus

    def _handle_line(self, client: _Client, line: bytes) -> None:
        now = self.app.clock.now()
        try:
            envelope = json.loads(line)
            topic = envelope["topic"]
            payload = envelope.get("payload") or {}
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            client.send(_envelope("_err", now, {"re": "?", "error": "BadEnvelope", "detail": str(exc)}))
            return
        if topic.startswith("_"):
            self._handle_control(client, topic, payload, now)
            return
        try:
            schema = self.app.bus.schema(topic)
            msg = from_json(schema, {**payload, "stamp": now})
        except (BusError, WireError) as exc:
            client.send(_envelope("_err", now, {
                "re": topic, "error": type(exc).__name__, "detail": str(exc),
            }))
            return
        try:
            if topic == TOPIC_WOZ:
                self.app.bus.publish(topic, msg, now)
                self.app.robot.woz_apply(msg)
            else:
                self.app.bus.publish(topic, msg, now)
        except (BusError, RobotError, PlannerError, SessionError) as exc:
            client.send(_envelope("_err", now, {
                "re": topic, "error": type(exc).__name__, "detail": str(exc),
            }))
            return
        client.send(_envelope("_ok", now, {"re": topic}))

    def _handle_control(self, client: _Client, verb: str, payload: dict, now: Timestamp) -> None:
        try:
            if verb == "_sub":
                client.patterns = list(payload["topics"])
                client.send(_envelope("_ok", now, {"re": "_sub", "topics": client.patterns}))
            elif verb == "_snapshot":
                client.send(_envelope("_snapshot_result", now, self._snapshot(now)))
            elif verb == "_bags":
                client.send(_envelope("_bags_result", now, {"bags": self._bag_inventory()}))
            elif verb == "_seek":
                client.send(_envelope("_seek_result", now, self._seek(payload)))
            elif verb == "_new_session":
                record = self.app.session.new_session(payload["condition"], now)
                client.send(_envelope("_ok", now, {"re": "_new_session", "session_id": record.session_id}))
            elif verb == "_advance":
                self.app.session.advance(payload["to"], now)
                client.send(_envelope("_ok", now, {"re": "_advance", "stage": payload["to"]}))
            elif verb == "_demographics":
                entries = [tuple(entry) for entry in payload["entries"]]
                self.app.session.register_demographics(entries, now)
                client.send(_envelope("_ok", now, {"re": "_demographics"}))
            elif verb == "_restart":
                epoch = self.app.session.health.restart(payload["module"], now)
                client.send(_envelope("_ok", now, {"re": "_restart", "epoch": epoch}))
            elif verb == "_annot_export":
                client.send(_envelope("_annot_export_result", now, {"text": self.app.annotations.export()}))
            elif verb == "_annot_import":
                self.app.annotations.import_(payload["text"])
                client.send(_envelope("_ok", now, {"re": "_annot_import"}))
            elif verb == "_annot_tracks":
                client.send(_envelope("_annot_tracks_result", now, {"tracks": self._tracks()}))
            else:
                client.send(_envelope("_err", now, {"re": verb, "error": "UnknownVerb", "detail": verb}))
        except (BusError, RobotError, PlannerError, SessionError, KeyError, ValueError) as exc:
            client.send(_envelope("_err", now, {
                "re": verb, "error": type(exc).__name__, "detail": str(exc),
            }))

    # -- control helpers

    def _snapshot(self, now: Timestamp) -> dict:
        from .session import IDEAS_BOX, STAGE_CHECKLIST

        state = self.app.engine.state
        session = self.app.session.active
        stage = session.stage if session is not None else None
        return {
            "ideas_box": list(IDEAS_BOX),
            "checklist": list(STAGE_CHECKLIST.get(stage or "", ())),
            "t": now,
            "items": [
                {
                    "id": item.id, "kind": item.kind, "x": item.pose.x, "y": item.pose.y,
                    "w": item.w, "h": item.h, "z": item.z,
                }
                for item in state.items
            ],
            "strokes": [
                {"colour": s.colour, "width": s.width, "points": [[p[0], p[1]] for p in s.points]}
                for s in state.strokes
            ],
            "background": base64.b64encode(state.background.tobytes()).decode("ascii"),
            "mode": state.mode,
            "session": None if session is None else {
                "session_id": session.session_id,
                "condition": session.condition,
                "stage": session.stage,
            },
            "health": self.app.session.health.report(now),
            "calibrated": self.app.robot.calibration is not None
            and self.app.robot.calibration.valid,
        }

    def _bag_inventory(self) -> list:
        if not self.bags_dir or not os.path.isdir(self.bags_dir):
            return []
        out = []
        for name in sorted(os.listdir(self.bags_dir)):
            if name.endswith(BAG_EXTENSION):
                reader = self._reader(name)
                bounds = reader.time_bounds or (0, 0)
                out.append({
                    "name": name,
                    "session_id": reader.session_id,
                    "start": bounds[0],
                    "end": bounds[1],
                    "records": reader.record_count,
                })
        return out

    def _reader(self, name: str) -> BagReader:
        if name not in self._readers:
            self._readers[name] = BagReader(os.path.join(self.bags_dir, name))
        return self._readers[name]

    def _seek(self, payload: dict) -> dict:
        name = payload["bag"]
        t = int(payload["t"])
        reader = self._reader(name)
        bounds = reader.time_bounds
        if bounds is None or t > bounds[1]:
            raise ValueError(f"seek target {t} past bag end")
        tracker = state_at(reader, t)
        state = tracker.state
        return {
            "t": t,
            "bag": name,
            "items": [
                {
                    "id": item.id, "kind": item.kind, "x": item.pose.x, "y": item.pose.y,
                    "w": item.w, "h": item.h, "z": item.z,
                }
                for item in state.items
            ],
            "strokes": [
                {"colour": s.colour, "width": s.width, "points": [[p[0], p[1]] for p in s.points]}
                for s in state.strokes
            ],
            "background": base64.b64encode(state.background.tobytes()).decode("ascii"),
            "hash": f"{tracker.hash():016x}",
        }

    def _tracks(self) -> list:
        out = []
        for coder in sorted(self.app.annotations.tracks):
            track = self.app.annotations.tracks[coder]
            for interval in track.intervals():
                out.append({
                    "coder": coder,
                    "child": interval.child,
                    "axis": interval.axis,
                    "value": interval.value,
                    "start": interval.start,
                    "end": interval.end,
                })
        return out


def serve(
    port: int = 7350,
    bags_dir: str | None = None,
    condition: str = "child_child",
    seed: int = 0,
    policy: str = "none",
    robot_speed: float = 0.05,
    http_port: int | None = None,
    web_root: str | None = None,
) -> int:
    """Blocking entry point for `sandbox serve`."""
    app = SandboxApp(out_dir=bags_dir or ".", robot_speed=robot_speed)
    if policy == "asocial":
        app.enable_policy(seed)
    app.session.new_session(condition, app.clock.now())
    server = GatewayServer(app, port=port, bags_dir=bags_dir)

    async def _main() -> None:
        bound = await server.start()
        print(f"gateway listening on 127.0.0.1:{bound}", flush=True)
        if http_port is not None:
            web = await server.start_web(http_port, web_root)
            print(f"web surfaces on http://127.0.0.1:{web}/", flush=True)
        try:
            while True:
                await asyncio.sleep(3600)
        finally:
            await server.stop()

    try:
        asyncio.run(_main())
    except KeyboardInterrupt:
        pass
    return 0
