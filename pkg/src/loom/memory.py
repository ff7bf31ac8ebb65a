"""Per-character selective memory.

Each character holds a small FIFO working window of recently perceived
events. When the window overflows, the evicted event is rated for emotional
impact; events at or above the promotion threshold become permanent
long-term memories (and may rewrite the character's one-line understanding
of another character), the rest fade. All updates are pure: states are
values, and replaying the same perception/score sequence reproduces the
same state exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Iterable

from .scenario import SimulationParams


@dataclass(frozen=True)
class PerceivedEvent:
    source_node: str
    kind: str  # "dialogue" | "stage_direction"
    speaker: str | None
    text: str


@dataclass(frozen=True)
class WorkingMemory:
    slots: tuple[PerceivedEvent, ...] = ()


@dataclass(frozen=True)
class MemoryItem:
    content: str
    score: float
    source_node: str
    tags: frozenset[str]
    acquired_at: int


@dataclass(frozen=True)
class CharacterMemoryState:
    owner: str
    working: WorkingMemory = WorkingMemory()
    long_term: tuple[MemoryItem, ...] = ()
    understanding: dict[str, str] = field(default_factory=dict)


def perceive(
    state: CharacterMemoryState,
    event: PerceivedEvent,
    params: SimulationParams,
) -> tuple[CharacterMemoryState, PerceivedEvent | None]:
    """Append an event to the working window; return the evicted oldest
    event once the window would exceed its size, else None."""
    slots = state.working.slots + (event,)
    evicted: PerceivedEvent | None = None
    if len(slots) > params.window_size:
        evicted, slots = slots[0], slots[1:]
    return replace(state, working=WorkingMemory(slots)), evicted


def detect_tags(text: str, cast: Iterable[tuple[str, str]]) -> frozenset[str]:
    """Character ids whose id or display name occurs in the text as a
    case-insensitive whole word."""
    lowered = text.lower()
    tags: set[str] = set()
    for char_id, name in cast:
        for needle in (char_id, name):
            needle = needle.strip().lower()
            if not needle:
                continue
            if re.search(r"(?<!\w)" + re.escape(needle) + r"(?!\w)", lowered):
                tags.add(char_id)
                break
    return frozenset(tags)


def score_and_promote(
    state: CharacterMemoryState,
    evicted: PerceivedEvent,
    score: float,
    params: SimulationParams,
    cast: Iterable[tuple[str, str]],
    acquired_at: int,
) -> CharacterMemoryState:
    """Promote the evicted event to long-term memory when its impact score
    meets the threshold (inclusive); below it the event fades.

    Tags are the event's speaker plus every cast member mentioned in the
    text (whole-word match of id or name). `cast` is (id, name) pairs.
    """
    if score < params.promotion_threshold:
        return state
    tags = detect_tags(evicted.text, cast)
    if evicted.speaker is not None:
        tags |= {evicted.speaker}
    item = MemoryItem(
        content=evicted.text,
        score=score,
        source_node=evicted.source_node,
        tags=frozenset(tags),
        acquired_at=acquired_at,
    )
    return replace(state, long_term=state.long_term + (item,))


def recall(state: CharacterMemoryState, k: int) -> list[MemoryItem]:
    """Top-k long-term memories: score descending, ties newest first."""
    if k <= 0:
        return []
    ranked = sorted(state.long_term, key=lambda item: (-item.score, -item.acquired_at))
    return ranked[:k]


def update_understanding(
    state: CharacterMemoryState,
    item: MemoryItem,
    note_text: str,
    others: Iterable[str] | None = None,
) -> CharacterMemoryState:
    """Replace the understanding note for each tagged other character.

    Notes are whole replacements, one per other character; the owner is
    never a subject of their own understanding. `others` narrows the write
    to a subset of the item's tags (used when notes are generated per
    character rather than shared).
    """
    subjects = set(item.tags) - {state.owner}
    if others is not None:
        subjects &= set(others)
    if not subjects:
        return state
    understanding = dict(state.understanding)
    for other_id in subjects:
        understanding[other_id] = note_text
    return replace(state, understanding=understanding)
