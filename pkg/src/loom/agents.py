"""Agent runtime: turns memory + profile + world into generation requests
and structured turns.

Prompt assembly is where information hiding is enforced: a request contains
the requesting character's own profile (secrets included), their
understanding notes, recalled long-term memories, and the working window,
never anything drawn from another character's profile.
"""

from __future__ import annotations

import logging
import re

from .errors import BackendParseError
from .generation import (
    PURPOSE_DIRECTOR,
    PURPOSE_IMPACT,
    PURPOSE_TURN,
    PURPOSE_UNDERSTANDING,
    Backend,
    DecodeParams,
    GenerationRequest,
    GenerationResult,
)
from .memory import CharacterMemoryState, MemoryItem, recall
from .scenario import CharacterProfile, SimulationParams, WorldConfig

log = logging.getLogger(__name__)

TURN_INSTRUCTION = (
    "Reply with exactly these labeled lines:\n"
    "SPEECH: what you say next, in character (required)\n"
    "ACTION: a short physical action, if any (optional)\n"
    "THOUGHT: your private thought about this moment"
)
REPROMPT_INSTRUCTION = (
    "Your previous reply did not follow the format. " + TURN_INSTRUCTION
)
IMPACT_INSTRUCTION = (
    "Rate the emotional significance of the event above for you personally.\n"
    "Reply with a single decimal number between 0 and 1 and nothing else."
)

_LABEL_RE = re.compile(r"^\s*(speech|action|thought)\s*:\s*(.*)$", re.IGNORECASE)
_DECIMAL_RE = re.compile(r"[-+]?\d*\.?\d+")


def _identity_text(profile: CharacterProfile, world: WorldConfig) -> str:
    lines = [f"You are {profile.name} ({profile.id})."]
    if profile.personality:
        lines.append(f"Personality: {profile.personality}")
    if profile.goals:
        lines.append("Goals: " + "; ".join(profile.goals))
    if profile.flaws:
        lines.append("Flaws: " + "; ".join(profile.flaws))
    if profile.relationships:
        lines.append(
            "Relationships: "
            + "; ".join(f"{other}: {desc}" for other, desc in sorted(profile.relationships.items()))
        )
    if profile.secrets:
        lines.append("Your secrets (known only to you): " + "; ".join(profile.secrets))
    lines.append(f"Setting: {world.setting}")
    if world.tone:
        lines.append(f"Tone: {world.tone}")
    if world.genre:
        lines.append(f"Genre: {world.genre}")
    return "\n".join(lines)


def assemble_prompt(
    profile: CharacterProfile,
    world: WorldConfig,
    mem: CharacterMemoryState,
    params: SimulationParams,
    seed: int,
    temperature: float = 0.7,
) -> GenerationRequest:
    """Build a turn request: identity, understanding notes, recalled
    memories, the working window verbatim in perception order, then the
    format instruction. Empty memory blocks are elided."""
    if profile.id != mem.owner:
        raise ValueError(f"profile {profile.id!r} does not own memory state of {mem.owner!r}")

    blocks: list[tuple[str, str]] = [("identity", _identity_text(profile, world))]

    if mem.understanding:
        notes = "\n".join(f"{other}: {note}" for other, note in sorted(mem.understanding.items()))
        blocks.append(("understanding", notes))

    recalled = recall(mem, params.recall_k)
    if recalled:
        blocks.append(("long_term_memories", "\n".join(item.content for item in recalled)))

    window_events = tuple(event.text for event in mem.working.slots)
    if window_events:
        blocks.append(("working_window", "\n".join(window_events)))

    blocks.append(("instruction", TURN_INSTRUCTION))

    return GenerationRequest(
        purpose=PURPOSE_TURN,
        owner_id=profile.id,
        owner_name=profile.name,
        context_blocks=tuple(blocks),
        decode=DecodeParams(seed=seed, temperature=temperature),
        window_events=window_events,
    )


def parse_turn_reply(raw: str) -> GenerationResult | None:
    """Line-wise parse of SPEECH/ACTION/THOUGHT labels; unlabeled lines
    continue the previous field. None when no non-empty speech was found."""
    fields: dict[str, str] = {}
    current: str | None = None
    for line in raw.splitlines():
        match = _LABEL_RE.match(line)
        if match:
            current = match.group(1).lower()
            fields[current] = match.group(2).strip()
        elif current and line.strip():
            fields[current] = (fields[current] + " " + line.strip()).strip()
    speech = fields.get("speech", "").strip()
    if not speech:
        return None
    return GenerationResult(
        speech=speech,
        action=fields.get("action", "").strip() or None,
        thought=fields.get("thought", "").strip() or None,
    )


def _with_reprompt(request: GenerationRequest) -> GenerationRequest:
    blocks = request.context_blocks + (("instruction", REPROMPT_INSTRUCTION),)
    return GenerationRequest(
        purpose=request.purpose,
        owner_id=request.owner_id,
        owner_name=request.owner_name,
        context_blocks=blocks,
        decode=request.decode,
        window_events=request.window_events,
        subject_text=request.subject_text,
        other_id=request.other_id,
        choices=request.choices,
    )


def generate_turn(backend: Backend, request: GenerationRequest) -> GenerationResult:
    """One backend call yields speech+action+thought atomically. Transport
    failures propagate (the backend retried once already); a parse failure
    earns one reprompt, then the raw output is surfaced in the error."""
    if request.purpose != PURPOSE_TURN:
        raise ValueError(f"generate_turn needs a turn request, got {request.purpose!r}")
    raw = backend.complete(request)
    result = parse_turn_reply(raw)
    if result is not None:
        return result
    raw = backend.complete(_with_reprompt(request))
    result = parse_turn_reply(raw)
    if result is not None:
        return result
    raise BackendParseError("turn reply unparseable after reprompt", raw_output=raw)


def rate_impact(
    backend: Backend,
    evicted_text: str,
    profile: CharacterProfile,
    seed: int,
) -> float:
    """Ask the backend for a [0,1] emotional-significance rating of an
    evicted event, for this character. Total: failures never abort the
    simulation: after one retry the event simply fades (score 0.0)."""
    request = GenerationRequest(
        purpose=PURPOSE_IMPACT,
        owner_id=profile.id,
        owner_name=profile.name,
        context_blocks=(
            ("identity", f"You are {profile.name} ({profile.id})."),
            ("subject", evicted_text),
            ("instruction", IMPACT_INSTRUCTION),
        ),
        decode=DecodeParams(seed=seed, temperature=0.0),
        subject_text=evicted_text,
    )
    for attempt in range(2):
        try:
            raw = backend.complete(request if attempt == 0 else _with_reprompt(request))
        except Exception as exc:
            log.warning("impact rating attempt %d failed for %s: %s", attempt + 1, profile.id, exc)
            continue
        match = _DECIMAL_RE.search(raw)
        if match:
            return min(1.0, max(0.0, float(match.group(0))))
        log.warning("impact rating reply unparseable for %s: %r", profile.id, raw[:120])
    log.warning("impact rating failed twice for %s; event fades", profile.id)
    return 0.0


def generate_understanding(
    backend: Backend,
    profile: CharacterProfile,
    item: MemoryItem,
    other_id: str,
    seed: int,
) -> str | None:
    """One-sentence note about other_id from this character's perspective,
    prompted by a just-promoted memory. None on final failure (the caller
    leaves the existing understanding unchanged)."""
    if other_id not in item.tags:
        raise ValueError(f"{other_id!r} is not tagged in the promoted memory")
    request = GenerationRequest(
        purpose=PURPOSE_UNDERSTANDING,
        owner_id=profile.id,
        owner_name=profile.name,
        context_blocks=(
            ("identity", f"You are {profile.name} ({profile.id})."),
            ("subject", item.content),
            ("instruction",
             f"In one sentence, state what you now understand about {other_id}, "
             "given the memory above."),
        ),
        decode=DecodeParams(seed=seed, temperature=0.3),
        subject_text=item.content,
        other_id=other_id,
    )
    for attempt in range(2):
        try:
            raw = backend.complete(request if attempt == 0 else _with_reprompt(request))
        except Exception as exc:
            log.warning("understanding note attempt %d failed for %s: %s", attempt + 1, profile.id, exc)
            continue
        note = raw.strip().splitlines()[0].strip() if raw.strip() else ""
        if note:
            return note
    log.warning("understanding note failed twice for %s about %s; unchanged", profile.id, other_id)
    return None


def _match_cast(reply: str, cast: tuple[CharacterProfile, ...]) -> str | None:
    cleaned = reply.strip().strip(".,!?\"'` ").lower()
    if not cleaned:
        return None
    for profile in cast:
        if cleaned == profile.id.lower() or cleaned == profile.name.strip().lower():
            return profile.id
    return None


def choose_next_speaker(
    policy: str,
    cast: tuple[CharacterProfile, ...],
    last_speaker: str | None,
    backend: Backend,
    tail_events: tuple[str, ...],
    seed: int,
) -> str:
    """Pick who speaks next. round_robin cycles declaration order;
    director asks the backend, falling back to round_robin on any invalid
    reply. Total by construction."""
    if not cast:
        raise ValueError("cast is empty")
    ids = [profile.id for profile in cast]
    if last_speaker in ids:
        round_robin = ids[(ids.index(last_speaker) + 1) % len(ids)]
    else:
        round_robin = ids[0]
    if policy != "director":
        return round_robin

    request = GenerationRequest(
        purpose=PURPOSE_DIRECTOR,
        owner_id="",
        owner_name="",
        context_blocks=(
            ("cast", "\n".join(f"{p.id}: {p.name}" for p in cast)),
            ("transcript_tail", "\n".join(tail_events)),
            ("instruction",
             "Name the single cast member (by id or name) who should speak next. "
             "Reply with the name only."),
        ),
        decode=DecodeParams(seed=seed, temperature=0.0),
        window_events=tail_events,
        choices=tuple(ids),
    )
    try:
        reply = backend.complete(request)
    except Exception as exc:
        log.warning("director call failed, falling back to round robin: %s", exc)
        return round_robin
    return _match_cast(reply, cast) or round_robin
