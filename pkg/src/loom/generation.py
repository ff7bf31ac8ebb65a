"""Generation backends: a deterministic mock and a chat-completion HTTP client.

The mock is the replay/test workhorse: every reply is a pure FNV-1a hash of
(seed, purpose, owner, last window event), so whole sessions are bit-exact
reproducible with no network. The HTTP backend talks to any
chat-completion-style JSON API with bearer auth, one retry, 60 s timeout.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass
from typing import Callable, Protocol

import httpx

from .errors import BackendTransportError

PURPOSE_TURN = "turn"
PURPOSE_IMPACT = "impact_score"
PURPOSE_UNDERSTANDING = "understanding_note"
PURPOSE_DIRECTOR = "director_choice"

DEFAULT_TIMEOUT_S = 60.0
DEFAULT_AUTH_ENV = "LOOM_API_KEY"


@dataclass(frozen=True)
class DecodeParams:
    seed: int = 0
    temperature: float = 0.7


@dataclass(frozen=True)
class GenerationRequest:
    """A fully assembled backend request.

    context_blocks is the canonical prompt content: ordered (label, text)
    pairs. The remaining fields are assembly metadata so deterministic
    backends and audits can work from structure instead of re-parsing prose:
    window_events holds the working-window texts verbatim in perception
    order, subject_text the text being rated or summarized, other_id the
    understanding-note target, choices the candidate speaker ids.
    """

    purpose: str
    owner_id: str
    owner_name: str
    context_blocks: tuple[tuple[str, str], ...]
    decode: DecodeParams = DecodeParams()
    window_events: tuple[str, ...] = ()
    subject_text: str = ""
    other_id: str = ""
    choices: tuple[str, ...] = ()


@dataclass(frozen=True)
class GenerationResult:
    speech: str
    action: str | None = None
    thought: str | None = None


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # "mock" | "http"
    endpoint: str = ""
    model_name: str = ""
    auth_env: str = DEFAULT_AUTH_ENV  # env var holding the bearer token


class Backend(Protocol):
    def complete(self, request: GenerationRequest) -> str: ...


# --- FNV-1a 64-bit -----------------------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _hx(value: int) -> str:
    return format(value, "016x")


class MockBackend:
    """Deterministic backend. Reply contract, per purpose, with
    h = fnv1a64(utf8("{seed}|{purpose}|{owner_id}|{last_window_event_text}")):

    - turn: labeled SPEECH/ACTION/THOUGHT lines; speech suffix is the first
      8 hex digits of h, the ACTION line is present iff h % 3 == 0, and the
      thought suffix is the first 8 hex digits of fnv1a64(hex16(h)).
    - impact_score: "{(fnv1a64(utf8(subject_text + '|' + owner_id)) % 101) / 100:.2f}"
    - understanding_note: "{owner_name} now sees {other_id}: {first 8 hex of
      fnv1a64(utf8(subject_text))}"
    - director_choice: choices[h % len(choices)]
    """

    def complete(self, request: GenerationRequest) -> str:
        last_event = request.window_events[-1] if request.window_events else ""
        key = f"{request.decode.seed}|{request.purpose}|{request.owner_id}|{last_event}"
        h = fnv1a64(key.encode("utf-8"))

        if request.purpose == PURPOSE_TURN:
            speech_tag = _hx(h)[:8]
            thought_tag = _hx(fnv1a64(_hx(h).encode("utf-8")))[:8]
            lines = [f"SPEECH: {request.owner_name} says: r-{speech_tag}"]
            if h % 3 == 0:
                lines.append(f"ACTION: {request.owner_name} shifts their weight")
            lines.append(f"THOUGHT: t-{thought_tag}")
            return "\n".join(lines)

        if request.purpose == PURPOSE_IMPACT:
            rating = fnv1a64(f"{request.subject_text}|{request.owner_id}".encode("utf-8"))
            return f"{(rating % 101) / 100:.2f}"

        if request.purpose == PURPOSE_UNDERSTANDING:
            tag = _hx(fnv1a64(request.subject_text.encode("utf-8")))[:8]
            return f"{request.owner_name} now sees {request.other_id}: {tag}"

        if request.purpose == PURPOSE_DIRECTOR:
            if not request.choices:
                return ""
            return request.choices[h % len(request.choices)]

        raise ValueError(f"unknown request purpose {request.purpose!r}")


class HttpBackend:
    """Chat-completion-style JSON client.

    Maps the request's identity block to the system message and the rest to
    one user message ("[label]\\ntext" paragraphs). One retry on transport
    failures, then BackendTransportError; cancellation is honored between
    attempts.
    """

    def __init__(
        self,
        endpoint: str,
        model_name: str,
        api_key: str | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        should_cancel: Callable[[], bool] | None = None,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint
        self.model_name = model_name
        self.api_key = api_key
        self.timeout_s = timeout_s
        self.should_cancel = should_cancel
        self._client = client or httpx.Client(timeout=timeout_s)

    def _messages(self, request: GenerationRequest) -> list[dict[str, str]]:
        system_parts = [text for label, text in request.context_blocks if label == "identity"]
        user_parts = [
            f"[{label}]\n{text}" for label, text in request.context_blocks if label != "identity"
        ]
        messages = []
        if system_parts:
            messages.append({"role": "system", "content": "\n\n".join(system_parts)})
        messages.append({"role": "user", "content": "\n\n".join(user_parts)})
        return messages

    def complete(self, request: GenerationRequest) -> str:
        payload = {
            "model": self.model_name,
            "messages": self._messages(request),
            "temperature": request.decode.temperature,
            "seed": request.decode.seed,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        for attempt in range(2):
            if attempt and self.should_cancel is not None and self.should_cancel():
                raise BackendTransportError("generation cancelled")
            try:
                response = self._client.post(self.endpoint, json=payload, headers=headers)
                response.raise_for_status()
                data = response.json()
                return data["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempt == 0:
                    time.sleep(0.2)
        raise BackendTransportError(f"backend call failed after retry: {last_error}")


def build_backend(descriptor: BackendDescriptor) -> Backend:
    if descriptor.kind == "mock":
        return MockBackend()
    if descriptor.kind == "http":
        if not descriptor.endpoint or not descriptor.model_name:
            raise ValueError("http backend requires an endpoint and a model name")
        return HttpBackend(
            endpoint=descriptor.endpoint,
            model_name=descriptor.model_name,
            api_key=os.environ.get(descriptor.auth_env or DEFAULT_AUTH_ENV),
        )
    raise ValueError(f"unknown backend kind {descriptor.kind!r}")
