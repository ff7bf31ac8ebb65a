"""Local HTTP service: sessions over JSON endpoints plus an SSE push stream.

One lock per session serializes its mutations; distinct sessions proceed in
parallel. Every 2xx mutating response is persisted before it is sent, and
stream events are published in commit order under the same lock.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import uuid
from pathlib import Path
from typing import Any, Iterator

from fastapi import Body, FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles

from . import orchestrator as orc
from .errors import (
    BackendParseError,
    BackendTransportError,
    DuplicateRootError,
    EmptyStirError,
    LoomError,
    NestedPathsError,
    NoChangesError,
    PersistenceError,
    ScenarioFormatError,
    ScenarioValidationError,
    SessionIntegrityError,
    UnknownNodeError,
    UnknownSessionError,
    UnknownSpeakerError,
)
from .generation import Backend, BackendDescriptor, MockBackend, build_backend
from .orchestrator import Session
from .persistence import list_session_ids, load_session, save_session
from .scenario import scenario_from_dict, scenario_to_dict, validate_scenario
from .timeline import node_to_dict, tree_to_dicts

log = logging.getLogger(__name__)

STATUS_BY_ERROR: tuple[tuple[type[LoomError], int], ...] = (
    (UnknownSessionError, 404),
    (UnknownNodeError, 404),
    (NestedPathsError, 409),
    (EmptyStirError, 409),
    (NoChangesError, 409),
    (UnknownSpeakerError, 409),
    (DuplicateRootError, 409),
    (ScenarioValidationError, 400),
    (ScenarioFormatError, 400),
    (BackendTransportError, 502),
    (BackendParseError, 502),
    (PersistenceError, 503),
    (SessionIntegrityError, 500),
)


class Broadcaster:
    """Per-session fan-out of stream events to subscriber queues."""

    def __init__(self) -> None:
        self._subscribers: list[queue.Queue] = []
        self._lock = threading.Lock()

    def subscribe(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def publish(self, kind: str, payload: dict[str, Any]) -> None:
        with self._lock:
            for q in self._subscribers:
                q.put((kind, payload))


class SessionStore:
    """In-memory sessions backed by one document per session on disk."""

    def __init__(self, data_dir: Path, backend: Backend):
        self.data_dir = Path(data_dir)
        self.backend = backend
        self.sessions: dict[str, Session] = {}
        self.locks: dict[str, threading.Lock] = {}
        self.broadcasters: dict[str, Broadcaster] = {}
        self._registry_lock = threading.Lock()
        self._load_existing()

    def _load_existing(self) -> None:
        for session_id in list_session_ids(self.data_dir):
            try:
                session = load_session(self.data_dir, session_id)
            except PersistenceError as exc:
                # One broken document must not take the service down.
                log.error("skipping session %s: %s", session_id, exc)
                continue
            self._register(session)

    def _register(self, session: Session) -> None:
        with self._registry_lock:
            self.sessions[session.id] = session
            self.locks.setdefault(session.id, threading.Lock())
            self.broadcasters.setdefault(session.id, Broadcaster())

    def create(self, session: Session) -> None:
        self._register(session)
        save_session(self.data_dir, session)

    def get(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise UnknownSessionError(f"unknown session {session_id!r}") from None

    def lock(self, session_id: str) -> threading.Lock:
        self.get(session_id)
        return self.locks[session_id]

    def persist(self, session_id: str) -> None:
        session = self.get(session_id)
        try:
            save_session(self.data_dir, session)
        except PersistenceError:
            # Keep memory consistent with the last durable document.
            try:
                self.sessions[session_id] = load_session(self.data_dir, session_id)
            except PersistenceError:
                log.error("could not reload %s after failed save", session_id)
            raise

    def publish(self, session_id: str, kind: str, payload: dict[str, Any]) -> None:
        self.broadcasters[session_id].publish(kind, payload)

    def subscribe(self, session_id: str) -> tuple[queue.Queue, dict[str, Any]]:
        # Snapshot and subscription happen under the session lock so the
        # stream sees every event committed after its snapshot, in order.
        with self.lock(session_id):
            session = self.get(session_id)
            snapshot = {
                "session_id": session_id,
                "active_head": session.tree.active_head,
                "node_count": len(session.tree),
            }
            return self.broadcasters[session_id].subscribe(), snapshot


def _session_summary(session: Session) -> dict[str, Any]:
    return {
        "id": session.id,
        "active_head": session.tree.active_head,
        "node_count": len(session.tree),
        "characters": [p.name for p in session.scenario.characters],
        "setting": session.scenario.world.setting,
    }


def _view_payload(session: Session, node_id: str) -> dict[str, Any]:
    view = orc.state_at(session, node_id)
    payload = orc.view_to_dict(view)
    payload["node"] = node_id
    return payload


def _parse_scenario(body: Any):
    if not isinstance(body, dict) or "scenario" not in body:
        raise ScenarioFormatError("request body must be an object with a 'scenario' key")
    scenario = scenario_from_dict(body["scenario"])
    report = validate_scenario(scenario)
    if report:
        raise ScenarioValidationError(report)
    return scenario


def create_app(
    data_dir: str | Path,
    backend: Backend | None = None,
    descriptor: BackendDescriptor | None = None,
    ui_dir: str | Path | None = None,
    stream_poll_s: float = 15.0,
) -> FastAPI:
    if backend is None:
        backend = build_backend(descriptor) if descriptor else MockBackend()
    store = SessionStore(Path(data_dir), backend)

    app = FastAPI(title="loom", docs_url=None, redoc_url=None)
    app.state.store = store
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(LoomError)
    async def loom_error_handler(_request: Request, exc: LoomError) -> JSONResponse:
        status = 500
        for error_type, code in STATUS_BY_ERROR:
            if isinstance(exc, error_type):
                status = code
                break
        body: dict[str, Any] = {"error": str(exc)}
        if isinstance(exc, ScenarioValidationError):
            body["violations"] = exc.violations
        return JSONResponse(status_code=status, content=body)

    # --- sessions -------------------------------------------------------------

    @app.post("/api/sessions")
    def create_session(body: dict = Body(...)) -> dict[str, Any]:
        scenario = _parse_scenario(body)
        seed = body.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ScenarioFormatError("seed must be an integer")
        session = Session(uuid.uuid4().hex[:12], scenario, seed=seed)
        store.create(session)
        return {"session_id": session.id}

    @app.get("/api/sessions")
    def list_sessions() -> dict[str, Any]:
        return {"sessions": [_session_summary(s) for s in store.sessions.values()]}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str) -> dict[str, Any]:
        session = store.get(session_id)
        return {
            "id": session.id,
            "seed": session.seed,
            "active_head": session.tree.active_head,
            "scenario": scenario_to_dict(session.scenario),
            "nodes": tree_to_dicts(session.tree),
        }

    # --- mutations ------------------------------------------------------------

    def _commit_node(session: Session, node_id: str) -> dict[str, Any]:
        store.persist(session.id)
        node_payload = node_to_dict(session.tree.get(node_id))
        store.publish(session.id, "node_added", {"node": node_payload})
        store.publish(
            session.id, "head_changed", {"active_head": session.tree.active_head}
        )
        hint = orc.stir_hint(session, node_id)
        if hint is not None:
            store.publish(
                session.id,
                "hint",
                {
                    "at_node": hint.at_node,
                    "novelty": hint.novelty,
                    "consecutive_low": hint.consecutive_low,
                },
            )
        return {"node": node_payload, "active_head": session.tree.active_head}

    @app.post("/api/sessions/{session_id}/nodes/{node_id}/advance")
    def advance_endpoint(
        session_id: str, node_id: str, body: dict | None = Body(default=None)
    ) -> dict[str, Any]:
        speaker = (body or {}).get("speaker")
        with store.lock(session_id):
            session = store.get(session_id)
            try:
                new_id = orc.advance(session, node_id, store.backend, speaker=speaker)
            except (BackendTransportError, BackendParseError) as exc:
                store.publish(session_id, "error", {"error": str(exc)})
                raise
            return _commit_node(session, new_id)

    @app.post("/api/sessions/{session_id}/nodes/{node_id}/stir")
    def stir_endpoint(session_id: str, node_id: str, body: dict = Body(...)) -> dict[str, Any]:
        text = body.get("text", "")
        if not isinstance(text, str):
            raise EmptyStirError("stir text must be a string")
        with store.lock(session_id):
            session = store.get(session_id)
            new_id = orc.stir(session, node_id, text, store.backend)
            return _commit_node(session, new_id)

    @app.post("/api/sessions/{session_id}/nodes/{node_id}/shape")
    def shape_endpoint(session_id: str, node_id: str, body: dict = Body(...)) -> dict[str, Any]:
        scenario = _parse_scenario(body)
        with store.lock(session_id):
            session = store.get(session_id)
            new_id = orc.shape(session, node_id, scenario)
            return _commit_node(session, new_id)

    @app.post("/api/sessions/{session_id}/select")
    def select_endpoint(session_id: str, body: dict = Body(...)) -> dict[str, Any]:
        node_id = body.get("node", "")
        with store.lock(session_id):
            session = store.get(session_id)
            orc.select(session, node_id)
            store.persist(session_id)
            store.publish(session_id, "head_changed", {"active_head": node_id})
            return {"ok": True, "active_head": node_id}

    # --- reads ----------------------------------------------------------------

    @app.get("/api/sessions/{session_id}/compare")
    def compare_endpoint(session_id: str, a: str = Query(...), b: str = Query(...)) -> dict[str, Any]:
        session = store.get(session_id)
        view = session.tree.compare(a, b)
        return {
            "shared_prefix": [node_to_dict(n) for n in view.shared_prefix],
            "suffix_a": [node_to_dict(n) for n in view.suffix_a],
            "suffix_b": [node_to_dict(n) for n in view.suffix_b],
        }

    @app.get("/api/sessions/{session_id}/state")
    def state_endpoint(session_id: str, node: str | None = Query(default=None)) -> dict[str, Any]:
        session = store.get(session_id)
        return _view_payload(session, node or session.tree.active_head)

    @app.get("/api/sessions/{session_id}/transcript")
    def transcript_endpoint(
        session_id: str,
        node: str | None = Query(default=None),
        thoughts: bool = Query(default=False),
    ) -> PlainTextResponse:
        session = store.get(session_id)
        text = orc.export_transcript(
            session, node or session.tree.active_head, include_thoughts=thoughts
        )
        return PlainTextResponse(text, media_type="text/markdown; charset=utf-8")

    # --- stream ---------------------------------------------------------------

    @app.get("/api/sessions/{session_id}/stream")
    def stream_endpoint(session_id: str) -> StreamingResponse:
        q, snapshot = store.subscribe(session_id)

        def events() -> Iterator[str]:
            try:
                yield _sse("snapshot", snapshot)
                while True:
                    try:
                        kind, payload = q.get(timeout=stream_poll_s)
                    except queue.Empty:
                        yield ": keep-alive\n\n"
                        continue
                    yield _sse(kind, payload)
            finally:
                store.broadcasters[session_id].unsubscribe(q)

        return StreamingResponse(events(), media_type="text/event-stream")

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def _sse(kind: str, payload: dict[str, Any]) -> str:
    return f"event: {kind}\ndata: {json.dumps(payload, ensure_ascii=False)}\n\n"
