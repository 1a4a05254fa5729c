"""Session-oriented HTTP service: the contract the lab UI consumes.

Commands are JSON over HTTP; results stream back as server-sent events with
strictly increasing per-session sequence numbers, resumable via ``?from=``.
Commands on one session serialize behind a lock, different sessions run
independently, and a session's whole event log replays byte-for-byte given
the same seed and command sequence.

Fires record full per-shot events up to a detail limit (default 50 shots per
fire); larger runs append one aggregated batch event for the remainder, which
keeps counter folding exact without flooding the stream.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse

from .errors import (
    InsufficientDataError,
    QBenchError,
    ReferenceError_,
    ValidationError,
)
from .propagate import HERALD_RULES, propagate_exact, propagate_sampled
from .rng import derive_seed, fresh_seed
from .scene import (
    BUILTIN_SCENE_NAMES,
    Scene,
    builtin_scene,
    scene_from_dict,
    scene_hash,
    scene_to_dict,
)

DEFAULT_EXPIRE_SECONDS = 30 * 60
DEFAULT_DETAIL_SHOTS = 50


@dataclass
class Session:
    id: str
    scene: Scene
    scene_name: str | None
    seed: int
    fire_count: int = 0
    total_shots: int = 0
    counts: dict = field(default_factory=dict)
    coincidences: dict = field(default_factory=dict)
    events: list[dict] = field(default_factory=list)
    seq: int = 0
    last_blochs: dict = field(default_factory=dict)
    last_active: float = field(default_factory=time.monotonic)
    lock: threading.RLock = field(default_factory=threading.RLock)
    changed: threading.Condition = None  # type: ignore[assignment]

    def __post_init__(self):
        self.changed = threading.Condition(self.lock)

    def append_event(self, kind: str, payload: dict) -> dict:
        self.seq += 1
        event = {"seq": self.seq, "kind": kind}
        event.update(payload)
        self.events.append(event)
        return event

    def state_dict(self) -> dict:
        return {
            "id": self.id,
            "scene_name": self.scene_name,
            "scene": scene_to_dict(self.scene),
            "scene_hash": scene_hash(self.scene),
            "seed": self.seed,
            "shots": self.total_shots,
            "counts": dict(sorted(self.counts.items())),
            "coincidences": dict(sorted(self.coincidences.items())),
            "bloch": self.last_blochs,
            "seq": self.seq,
        }


class SessionManager:
    def __init__(self, expire_seconds: float = DEFAULT_EXPIRE_SECONDS,
                 detail_shots: int = DEFAULT_DETAIL_SHOTS):
        self.expire_seconds = expire_seconds
        self.detail_shots = detail_shots
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    # -- lifecycle ----------------------------------------------------------

    def create(self, scene_ref, seed: int | None) -> Session:
        if isinstance(scene_ref, str):
            if scene_ref not in BUILTIN_SCENE_NAMES:
                raise ValidationError(f"unknown builtin scene {scene_ref!r}")
            scene = builtin_scene(scene_ref)
            name = scene_ref
        elif isinstance(scene_ref, dict):
            scene = scene_from_dict(scene_ref)
            name = None
        else:
            raise ValidationError("scene must be a builtin name or a scene document")
        session = Session(
            id=uuid.uuid4().hex,
            scene=scene,
            scene_name=name,
            seed=seed if seed is not None else fresh_seed(),
        )
        for det in scene.detectors:
            session.counts[det] = 0
        with self._lock:
            self._sweep()
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            self._sweep()
            session = self._sessions.get(session_id)
        if session is None:
            raise ReferenceError_(f"unknown session {session_id!r}")
        session.last_active = time.monotonic()
        return session

    def delete(self, session_id: str):
        with self._lock:
            if session_id not in self._sessions:
                raise ReferenceError_(f"unknown session {session_id!r}")
            del self._sessions[session_id]

    def ids(self) -> list[str]:
        with self._lock:
            self._sweep()
            return sorted(self._sessions)

    def _sweep(self):
        now = time.monotonic()
        stale = [
            sid
            for sid, s in self._sessions.items()
            if now - s.last_active > self.expire_seconds
        ]
        for sid in stale:
            del self._sessions[sid]

    # -- commands -----------------------------------------------------------

    def set_param(self, session_id: str, component_id: str, param: str, value,
                  interactive: bool = False) -> dict:
        session = self.get(session_id)
        with session.changed:
            applied = session.scene.set_param(component_id, param, value, interactive)
            session.append_event(
                "param_changed",
                {
                    "shot": None,
                    "component": component_id,
                    "param": param,
                    "value": applied,
                },
            )
            session.changed.notify_all()
            return session.state_dict()

    def fire(self, session_id: str, shots: int) -> dict:
        if shots < 1:
            raise ValidationError("shots must be >= 1")
        session = self.get(session_id)
        with session.changed:
            fire_seed = derive_seed(session.seed, session.fire_count)
            session.fire_count += 1
            herald_rule = HERALD_RULES.get(session.scene_name)
            exact = propagate_exact(session.scene)
            counts, trace = propagate_sampled(
                session.scene,
                shots,
                fire_seed,
                trace_shots=min(shots, self.detail_shots),
                herald_rule=herald_rule,
                exact=exact,
            )
            session.last_blochs = {
                comp: list(b) if b is not None else None
                for comp, b in exact.plate_blochs.items()
            }
            traced_clicks: dict[str, int] = {}
            traced_shots: set[int] = set()
            for event in trace.events:
                payload = event.to_dict()
                if payload.get("shot") is not None:
                    traced_shots.add(payload["shot"])
                session.append_event(payload.pop("kind"), payload)
                if event.kind == "detection":
                    det = event.data["detector"]
                    traced_clicks[det] = traced_clicks.get(det, 0) + event.data["clicks"]
            remainder = {
                det: counts.per_detector.get(det, 0) - traced_clicks.get(det, 0)
                for det in counts.per_detector
            }
            untraced = shots - min(shots, self.detail_shots)
            if untraced > 0:
                session.append_event(
                    "batch",
                    {
                        "shot": None,
                        "shots": untraced,
                        "per_detector": {
                            k: v for k, v in sorted(remainder.items()) if v != 0
                        },
                    },
                )
            for det, clicks in counts.per_detector.items():
                session.counts[det] = session.counts.get(det, 0) + clicks
            for key, n in counts.coincidences.items():
                session.coincidences[key] = session.coincidences.get(key, 0) + n
            session.total_shots += shots
            session.changed.notify_all()
            return {
                "accepted": shots,
                "seed": fire_seed,
                "seq": session.seq,
                "counts": dict(sorted(session.counts.items())),
            }


def _error_response(exc: QBenchError) -> JSONResponse:
    if isinstance(exc, ReferenceError_):
        status, code = 404, "reference"
    elif isinstance(exc, InsufficientDataError):
        status, code = 422, "insufficient-data"
    else:
        status, code = 422, "validation"
    return JSONResponse(
        status_code=status, content={"error": {"code": code, "detail": str(exc)}}
    )


def create_app(
    expire_seconds: float = DEFAULT_EXPIRE_SECONDS,
    detail_shots: int = DEFAULT_DETAIL_SHOTS,
    ui_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="qbench service", version="1")
    manager = SessionManager(expire_seconds=expire_seconds, detail_shots=detail_shots)
    app.state.manager = manager

    # the lab UI may be served from a separate static server during development
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.exception_handler(QBenchError)
    async def handle_bench_error(request: Request, exc: QBenchError):
        return _error_response(exc)

    @app.get("/scenes")
    def list_scenes():
        from .scene import SCENE_DESCRIPTIONS

        return {
            "scenes": [
                {"name": n, "description": SCENE_DESCRIPTIONS[n]}
                for n in BUILTIN_SCENE_NAMES
            ]
        }

    @app.post("/sessions", status_code=201)
    def create_session(body: dict):
        scene_ref = body.get("scene")
        seed = body.get("seed")
        session = manager.create(scene_ref, seed)
        return {"id": session.id, "seed": session.seed}

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": manager.ids()}

    @app.get("/sessions/{session_id}")
    def get_state(session_id: str):
        session = manager.get(session_id)
        with session.lock:
            return session.state_dict()

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        manager.delete(session_id)
        return Response(status_code=204)

    @app.patch("/sessions/{session_id}/components/{component_id}")
    def patch_param(session_id: str, component_id: str, body: dict):
        if "param" not in body or "value" not in body:
            raise ValidationError("body needs 'param' and 'value'")
        return manager.set_param(
            session_id,
            component_id,
            body["param"],
            body["value"],
            interactive=bool(body.get("interactive", False)),
        )

    @app.post("/sessions/{session_id}/fire", status_code=202)
    def fire(session_id: str, body: dict):
        shots = int(body.get("shots", 1))
        return manager.fire(session_id, shots)

    @app.get("/sessions/{session_id}/events")
    def stream_events(session_id: str, request: Request):
        """Ordered, resumable event feed.

        ``from`` resumes after a sequence number.  By default the stream
        stays open indefinitely (keepalive comments while quiet); clients
        that want a bounded read can pass ``max_events`` and/or ``idle_ms``
        to close the stream after a backlog or an idle period.
        """
        session = manager.get(session_id)
        params = request.query_params
        try:
            after = int(params.get("from", 0))
            max_events = int(params["max_events"]) if "max_events" in params else None
            idle_ms = float(params["idle_ms"]) if "idle_ms" in params else None
        except ValueError:
            raise ValidationError("'from', 'max_events' and 'idle_ms' must be numbers")

        def generate():
            cursor = after
            sent = 0
            while True:
                with session.changed:
                    pending = [e for e in session.events if e["seq"] > cursor]
                    if not pending:
                        session.changed.wait(
                            timeout=0.5 if idle_ms is None else idle_ms / 1000.0
                        )
                        pending = [e for e in session.events if e["seq"] > cursor]
                if not pending:
                    if idle_ms is not None:
                        return
                    yield ": keepalive\n\n"
                    continue
                for event in pending:
                    cursor = event["seq"]
                    body = json.dumps(event, sort_keys=True)
                    yield f"id: {event['seq']}\ndata: {body}\n\n"
                    sent += 1
                    if max_events is not None and sent >= max_events:
                        return

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app
