from __future__ import annotations

import json
import socket
import threading
import time
from contextlib import contextmanager
from typing import Iterator

import httpx
import pytest
import uvicorn

from loom.generation import GenerationRequest, MockBackend
from loom.scenario import CharacterProfile, Scenario, SimulationParams, WorldConfig


def make_scenario(
    n_characters: int = 3,
    window_size: int = 5,
    promotion_threshold: float = 0.6,
    scheduler_policy: str = "round_robin",
    novelty_window: int = 6,
    novelty_floor: float = 0.35,
) -> Scenario:
    names = ["Cal", "Mira", "Erik", "Dana", "Quinn", "Sol"]
    ids = [name.lower() for name in names[:n_characters]]
    characters = []
    for i, char_id in enumerate(ids):
        relationships = {other: f"knows {other} from town" for other in ids if other != char_id}
        characters.append(
            CharacterProfile(
                id=char_id,
                name=names[i],
                personality=f"{names[i]} is wary and observant.",
                goals=(f"protect the {char_id} ledger", "escape town"),
                flaws=("stubborn",),
                relationships=relationships,
                secrets=(
                    f"secret-{char_id}-alpha-7f3",
                    f"secret-{char_id}-beta-9c1",
                ),
            )
        )
    return Scenario(
        world=WorldConfig(setting="A snowbound inn at the pass", tone="tense", genre="mystery"),
        characters=tuple(characters),
        params=SimulationParams(
            window_size=window_size,
            promotion_threshold=promotion_threshold,
            scheduler_policy=scheduler_policy,
            novelty_window=novelty_window,
            novelty_floor=novelty_floor,
        ),
    )


class RecordingBackend:
    """Delegating backend that captures every request it serves."""

    def __init__(self, inner=None):
        self.inner = inner or MockBackend()
        self.requests: list[GenerationRequest] = []

    def complete(self, request: GenerationRequest) -> str:
        self.requests.append(request)
        return self.inner.complete(request)


class ScriptedBackend:
    """Backend whose turn replies are scripted verbatim; other purposes
    fall through to the mock. Used to force specific speech patterns."""

    def __init__(self, speeches: list[str]):
        self.speeches = list(speeches)
        self._mock = MockBackend()
        self._cursor = 0

    def complete(self, request: GenerationRequest) -> str:
        if request.purpose == "turn":
            speech = self.speeches[min(self._cursor, len(self.speeches) - 1)]
            self._cursor += 1
            return f"SPEECH: {speech}\nTHOUGHT: scripted"
        return self._mock.complete(request)


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@contextmanager
def running(app) -> Iterator[httpx.Client]:
    """Serve an app on an ephemeral port in a thread; yield a client for it.

    Stream tests need real chunked delivery, which the buffered test client
    cannot provide, so the service suites run over actual HTTP.
    """
    port = free_port()
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline or not thread.is_alive():
            raise RuntimeError("server failed to start")
        time.sleep(0.01)
    client = httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=10.0)
    try:
        yield client
    finally:
        client.close()
        server.should_exit = True
        thread.join(timeout=5)


def read_events(lines: Iterator[str], count: int) -> list[tuple[str, dict]]:
    """Read `count` SSE events from an iter_lines stream, skipping comments."""
    events: list[tuple[str, dict]] = []
    kind = None
    for line in lines:
        if line.startswith("event: "):
            kind = line[len("event: "):]
        elif line.startswith("data: ") and kind is not None:
            events.append((kind, json.loads(line[len("data: "):])))
            kind = None
            if len(events) >= count:
                break
    return events


@pytest.fixture
def scenario() -> Scenario:
    return make_scenario()


@pytest.fixture
def mock_backend() -> MockBackend:
    return MockBackend()


@pytest.fixture
def recording_backend() -> RecordingBackend:
    return RecordingBackend()
