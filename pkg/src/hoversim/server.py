"""Live serve mode: real-time pacing, WebSocket snapshots, remote commands.

One simulation thread owns the world and paces it against the wall clock
with fixed-step catch-up (physics steps are never skipped; only snapshot
emissions drop under load). Network handlers exchange immutable JSON
snapshots and enqueue commands; commands take effect at tick boundaries and
are recorded with their tick index, so a recorded session replays into
byte-identical telemetry.
"""

from __future__ import annotations

import asyncio
import json
import math
import threading
import time
from pathlib import Path
from queue import Empty, Queue

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .api import MoveCommand, MoveKind
from .errors import HoversimError, ScenarioError
from .scenario import Scenario
from .world import World

SNAPSHOT_RATE = 20.0  # Hz

_MOVE_KINDS = {k.value: k for k in MoveKind}

SCHEMA_PATH = Path(__file__).resolve().parents[2] / "protocol" / "serve_schema.json"


def _load_validator():
    try:
        import jsonschema
    except ImportError:
        return None
    if not SCHEMA_PATH.exists():
        return None
    schema = json.loads(SCHEMA_PATH.read_text())
    command = {"definitions": schema["definitions"], "$ref": "#/definitions/command"}
    return jsonschema.Draft7Validator(command)


_COMMAND_VALIDATOR = _load_validator()


def validate_message(msg) -> str | None:
    """Shape-check one inbound command against the shared protocol schema.
    Returns an error reason, or None when the message is well-formed."""
    if not isinstance(msg, dict) or "type" not in msg:
        return "message must be an object with a type"
    if _COMMAND_VALIDATOR is not None:
        errors = sorted(_COMMAND_VALIDATOR.iter_errors(msg), key=lambda e: e.path)
        if errors:
            return f"schema violation: {errors[0].message}"
    return None


def snapshot_of(world: World) -> dict:
    fr = world.frames[-1] if world.frames else None
    drone = world.drone
    human = world.human
    return {
        "type": "snapshot",
        "t": world.t,
        "drone": {
            "x": float(drone.position[0]),
            "y": float(drone.position[1]),
            "z": float(drone.position[2]),
            "yaw": float(drone.yaw),
        },
        "human": {
            "x": float(human.position[0]),
            "y": float(human.position[1]),
            "heading": float(human.heading),
        },
        "state": world.behavior.state.mode.value,
        "tau_est": (fr.tau_est if fr and not math.isnan(fr.tau_est) else None),
        "D_est": (fr.d_est if fr and not math.isnan(fr.d_est) else None),
        "metrics": {
            "distance_error": (fr.err_dist if fr else 0.0),
            "anc_dba": (fr.anc_dba if fr and not math.isnan(fr.anc_dba) else None),
            "event": (fr.event if fr else "lost"),
            "setpoint_distance": world.controller.setpoint.distance,
            "api_status": (fr.api_status if fr else "idle"),
        },
    }


def parse_move(doc: dict, defaults=None) -> MoveCommand:
    """Build a MoveCommand from a wire message; unspecified completion
    parameters fall back to the scenario's api_defaults."""
    kind = _MOVE_KINDS.get(str(doc.get("kind", "")))
    if kind is None:
        raise ScenarioError(f"unknown move kind: {doc.get('kind')!r}")
    fields = {}
    for name in ("z", "dx", "dy", "tolerance", "hold_time", "timeout"):
        if name in doc:
            fields[name] = float(doc[name])
    if defaults is not None:
        fields.setdefault("tolerance", defaults.tolerance)
        fields.setdefault("hold_time", defaults.hold_time)
        fields.setdefault("timeout", defaults.timeout)
    return MoveCommand(kind=kind, **fields)


def apply_message(world: World, msg: dict) -> str | None:
    """Apply one wire command at a tick boundary. Returns an error reason
    for invalid messages, None on success. pause/resume are handled by the
    pacing loop, not the world."""
    if not isinstance(msg, dict) or "type" not in msg:
        return "message must be an object with a type"
    kind = msg["type"]
    try:
        if kind == "user_move":
            world.live_move(
                float(msg.get("vx", 0.0)),
                float(msg.get("vy", 0.0)),
                float(msg.get("vheading", 0.0)),
            )
        elif kind == "gesture":
            gk = msg.get("kind")
            if gk not in ("summon", "relieve"):
                return f"unknown gesture kind: {gk!r}"
            world.apply_event("gesture", {"kind": gk}, world.t)
        elif kind == "api":
            move = msg.get("move")
            if not isinstance(move, dict):
                return "api message needs a move object"
            world.submit_nonblocking(parse_move(move, world.sc.api_defaults))
        elif kind == "set":
            if "path" not in msg or "value" not in msg:
                return "set message needs path and value"
            world.set_value(str(msg["path"]), msg["value"])
        elif kind in ("pause", "resume"):
            pass
        else:
            return f"unknown message type: {kind!r}"
    except (HoversimError, ValueError, TypeError) as exc:
        return str(exc)
    return None


def load_trace(path: str | Path) -> list[tuple[int, dict]]:
    entries = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        entries.append((int(doc["tick"]), doc["msg"]))
    entries.sort(key=lambda e: e[0])
    return entries


def replay_trace(scenario: Scenario, trace: list[tuple[int, dict]], duration: float | None = None) -> World:
    """Headless deterministic replay: inject each recorded command at its
    recorded tick and run to duration."""
    world = World(scenario)
    steps = int(round((scenario.duration if duration is None else duration) * scenario.timing.physics_rate))
    cursor = 0
    for _ in range(steps):
        while cursor < len(trace) and trace[cursor][0] <= world.tick_index:
            apply_message(world, trace[cursor][1])
            cursor += 1
        world.tick()
    world.finish()
    return world


class SimSession:
    """The simulation thread plus its command mailbox and trace recorder."""

    def __init__(self, scenario: Scenario, record: str | None = None, replay: str | None = None):
        self.scenario = scenario
        self.world = World(scenario)
        self.inbox: Queue[dict] = Queue()
        self.paused = threading.Event()
        self.stop_flag = threading.Event()
        self.record_path = record
        self._record_file = None
        self._replay = load_trace(replay) if replay else []
        self._replay_cursor = 0
        self.latest: dict | None = None
        self.errors: Queue[dict] = Queue()
        self.thread: threading.Thread | None = None

    def start(self) -> None:
        if self.record_path:
            self._record_file = open(self.record_path, "w")
        self.thread = threading.Thread(target=self._loop, daemon=True)
        self.thread.start()

    def stop(self) -> None:
        self.stop_flag.set()
        if self.thread is not None:
            self.thread.join(timeout=5.0)
        if self._record_file:
            self._record_file.close()
            self._record_file = None

    def enqueue(self, msg: dict) -> None:
        self.inbox.put(msg)

    def _apply_inbox(self) -> None:
        while True:
            try:
                msg = self.inbox.get_nowait()
            except Empty:
                return
            if msg.get("type") == "pause":
                self.paused.set()
            elif msg.get("type") == "resume":
                self.paused.clear()
            reason = apply_message(self.world, msg)
            if reason is not None:
                self.errors.put({"type": "error", "reason": reason})
                continue
            if self._record_file and msg.get("type") not in ("pause", "resume"):
                self._record_file.write(
                    json.dumps({"tick": self.world.tick_index, "msg": msg}) + "\n"
                )
                self._record_file.flush()

    def _loop(self) -> None:
        dt = self.world.dt
        snapshot_every = max(1, int(round(self.world.timing.physics_rate / SNAPSHOT_RATE)))
        start_wall = time.monotonic()
        done_ticks = 0
        while not self.stop_flag.is_set():
            self._apply_inbox()
            if self.paused.is_set():
                self.latest = snapshot_of(self.world)
                start_wall = time.monotonic() - done_ticks * dt  # freeze sim clock
                time.sleep(0.01)
                continue
            target = int((time.monotonic() - start_wall) / dt)
            if target <= done_ticks:
                time.sleep(0.002)
                continue
            for _ in range(min(target - done_ticks, 200)):
                while (
                    self._replay_cursor < len(self._replay)
                    and self._replay[self._replay_cursor][0] <= self.world.tick_index
                ):
                    apply_message(self.world, self._replay[self._replay_cursor][1])
                    self._replay_cursor += 1
                self.world.tick()
                done_ticks += 1
                if done_ticks % snapshot_every == 0:
                    self.latest = snapshot_of(self.world)
        self.world.finish()


def build_app(session: SimSession):
    from contextlib import asynccontextmanager

    @asynccontextmanager
    async def lifespan(_app):
        session.start()
        try:
            yield
        finally:
            session.stop()

    app = FastAPI(title="hoversim", lifespan=lifespan)

    frontend = SCHEMA_PATH.parent.parent / "frontend"
    if (frontend / "index.html").exists():
        from fastapi.responses import FileResponse
        from fastapi.staticfiles import StaticFiles

        @app.get("/")
        async def index():
            return FileResponse(frontend / "index.html")

        if (frontend / "dist").exists():
            app.mount("/dist", StaticFiles(directory=frontend / "dist"), name="dist")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()

        async def sender():
            while True:
                while not session.errors.empty():
                    try:
                        await ws.send_json(session.errors.get_nowait())
                    except Empty:
                        break
                if session.latest is not None:
                    await ws.send_json(session.latest)
                await asyncio.sleep(1.0 / SNAPSHOT_RATE)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_json({"type": "error", "reason": "invalid JSON frame"})
                    continue
                reason = validate_message(msg)
                if reason is not None:
                    await ws.send_json({"type": "error", "reason": reason})
                    continue
                session.enqueue(msg)
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()

    return app


def serve(scenario: Scenario, port: int, record: str | None = None, replay: str | None = None) -> None:
    import uvicorn

    session = SimSession(scenario, record=record, replay=replay)
    app = build_app(session)
    uvicorn.run(app, host="0.0.0.0", port=port, log_level="warning")
