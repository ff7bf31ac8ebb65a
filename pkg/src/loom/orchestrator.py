"""The Shape/Observe/Stir/Select state machine over the branch tree.

World state at any node is a pure fold of the root→node path: scene setup
initializes, reshapes swap profiles, dialogue and stage directions are
perceived by every character. All backend-dependent values (turn
generations, impact scores, understanding notes) are computed once, at the
live mutation that created them, and cached on the session, so replaying
history is backend-free and two replays of the same node are identical down
to the byte.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Any, Protocol, Sequence

from .agents import (
    assemble_prompt,
    choose_next_speaker,
    generate_turn,
    generate_understanding,
    rate_impact,
)
from .errors import (
    EmptyStirError,
    NoChangesError,
    ScenarioValidationError,
    SessionIntegrityError,
    UnknownSpeakerError,
)
from .generation import Backend, GenerationResult
from .memory import (
    CharacterMemoryState,
    MemoryItem,
    PerceivedEvent,
    perceive,
    score_and_promote,
    update_understanding,
)
from .scenario import (
    CharacterProfile,
    Scenario,
    apply_deltas,
    diff_profiles,
    validate_scenario,
)
from .timeline import (
    KIND_DIALOGUE,
    KIND_RESHAPE,
    KIND_SCENE_SETUP,
    KIND_STAGE_DIRECTION,
    ORIGIN_AUTHOR_STIR,
    BranchTree,
    DialoguePayload,
    ReshapePayload,
    StageDirectionPayload,
    TurnNode,
)


@dataclass(frozen=True)
class TranscriptEntry:
    node_id: str
    rendered: str
    thought: str | None = None


@dataclass(frozen=True)
class WorldStateView:
    """Derived state at one node: a pure function of the root→node path."""

    effective_scenario: Scenario
    memories: dict[str, CharacterMemoryState]
    transcript: tuple[TranscriptEntry, ...]
    last_speaker: str | None


@dataclass(frozen=True)
class StirHint:
    at_node: str
    novelty: float
    consecutive_low: int


class Session:
    """One narrative run: the branch tree plus every cached backend result.

    Single-writer: callers serialize mutations (the service holds one lock
    per session; the CLI is single-threaded).
    """

    def __init__(self, session_id: str, scenario: Scenario, seed: int = 0):
        self.id = session_id
        self.scenario = scenario
        self.seed = seed
        self.tree = BranchTree.create(scenario)
        self.score_cache: dict[tuple[str, str], float] = {}
        self.note_cache: dict[tuple[str, str, str], str] = {}
        self.generation_cache: dict[str, GenerationResult] = {}
        self.state_cache: dict[str, WorldStateView] = {}
        self.state_cache[self.tree.root_id] = initial_view(scenario)

    @classmethod
    def from_parts(
        cls,
        session_id: str,
        scenario: Scenario,
        seed: int,
        tree: BranchTree,
        score_cache: dict[tuple[str, str], float],
        note_cache: dict[tuple[str, str, str], str],
        generation_cache: dict[str, GenerationResult],
    ) -> "Session":
        session = cls.__new__(cls)
        session.id = session_id
        session.scenario = scenario
        session.seed = seed
        session.tree = tree
        session.score_cache = score_cache
        session.note_cache = note_cache
        session.generation_cache = generation_cache
        session.state_cache = {}
        return session


def initial_view(scenario: Scenario) -> WorldStateView:
    return WorldStateView(
        effective_scenario=scenario,
        memories={p.id: CharacterMemoryState(owner=p.id) for p in scenario.characters},
        transcript=(),
        last_speaker=None,
    )


# --- score/note sources -------------------------------------------------------


class ScoreSource(Protocol):
    """Where the fold gets impact scores and understanding notes."""

    def impact(self, profile: CharacterProfile, evicted: PerceivedEvent) -> float: ...

    def note(self, profile: CharacterProfile, item: MemoryItem, other_id: str) -> str | None: ...


class ReplaySource:
    """Cache-only: replaying history must never touch a backend. A score
    miss means the session lost data it committed earlier."""

    def __init__(self, session: Session):
        self.session = session

    def impact(self, profile: CharacterProfile, evicted: PerceivedEvent) -> float:
        key = (profile.id, evicted.source_node)
        if key not in self.session.score_cache:
            raise SessionIntegrityError(
                f"impact score for character {profile.id!r} at node "
                f"{evicted.source_node!r} missing from session {self.session.id!r}"
            )
        return self.session.score_cache[key]

    def note(self, profile: CharacterProfile, item: MemoryItem, other_id: str) -> str | None:
        # A missing note is not corruption: the live understanding call is
        # allowed to fail, leaving understanding unchanged.
        return self.session.note_cache.get((profile.id, item.source_node, other_id))


class LiveSource:
    """Backend-computing source used by live mutations; fills the caches so
    later replays stay pure. Both calls are total (rate_impact defaults to
    0.0, a failed note returns None), so folding never aborts a mutation."""

    def __init__(self, session: Session, backend: Backend):
        self.session = session
        self.backend = backend

    def impact(self, profile: CharacterProfile, evicted: PerceivedEvent) -> float:
        key = (profile.id, evicted.source_node)
        if key not in self.session.score_cache:
            score = rate_impact(self.backend, evicted.text, profile, seed=self.session.seed)
            self.session.score_cache[key] = score
        return self.session.score_cache[key]

    def note(self, profile: CharacterProfile, item: MemoryItem, other_id: str) -> str | None:
        key = (profile.id, item.source_node, other_id)
        if key not in self.session.note_cache:
            note = generate_understanding(
                self.backend, profile, item, other_id, seed=self.session.seed
            )
            if note is None:
                return None
            self.session.note_cache[key] = note
        return self.session.note_cache[key]


# --- the fold ------------------------------------------------------------------


def _dialogue_event_text(payload: DialoguePayload) -> str:
    if payload.action:
        return f"{payload.speech} {payload.action}"
    return payload.speech


def _perceive_all(
    view: WorldStateView, event: PerceivedEvent, acquired_at: int, scores: ScoreSource
) -> dict[str, CharacterMemoryState]:
    scenario = view.effective_scenario
    cast_pairs = [(p.id, p.name) for p in scenario.characters]
    memories = dict(view.memories)
    for profile in scenario.characters:
        state = memories[profile.id]
        state, evicted = perceive(state, event, scenario.params)
        if evicted is not None:
            score = scores.impact(profile, evicted)
            before = len(state.long_term)
            state = score_and_promote(
                state, evicted, score, scenario.params, cast_pairs, acquired_at
            )
            if len(state.long_term) > before:
                item = state.long_term[-1]
                for other_id in sorted(item.tags - {profile.id}):
                    note = scores.note(profile, item, other_id)
                    if note is not None:
                        state = update_understanding(state, item, note, others=(other_id,))
        memories[profile.id] = state
    return memories


def fold_event(view: WorldStateView, node: TurnNode, scores: ScoreSource) -> WorldStateView:
    """Extend a state view by one timeline node."""
    if node.kind == KIND_DIALOGUE:
        assert isinstance(node.payload, DialoguePayload)
        payload = node.payload
        scenario = view.effective_scenario
        try:
            name = scenario.character(payload.speaker).name
        except KeyError:
            name = payload.speaker
        event = PerceivedEvent(
            source_node=node.id,
            kind="dialogue",
            speaker=payload.speaker,
            text=_dialogue_event_text(payload),
        )
        memories = _perceive_all(view, event, node.created_at, scores)
        rendered = f"{name}: {payload.speech}"
        if payload.action:
            rendered += f" *{payload.action}*"
        entry = TranscriptEntry(node_id=node.id, rendered=rendered, thought=payload.thought)
        return WorldStateView(
            effective_scenario=scenario,
            memories=memories,
            transcript=view.transcript + (entry,),
            last_speaker=payload.speaker,
        )

    if node.kind == KIND_STAGE_DIRECTION:
        assert isinstance(node.payload, StageDirectionPayload)
        event = PerceivedEvent(
            source_node=node.id,
            kind="stage_direction",
            speaker=None,
            text=node.payload.text,
        )
        memories = _perceive_all(view, event, node.created_at, scores)
        entry = TranscriptEntry(node_id=node.id, rendered=f"*{node.payload.text}*")
        return replace(view, memories=memories, transcript=view.transcript + (entry,))

    if node.kind == KIND_RESHAPE:
        assert isinstance(node.payload, ReshapePayload)
        effective = apply_deltas(view.effective_scenario, list(node.payload.deltas))
        memories = dict(view.memories)
        for profile in effective.characters:
            # Characters added mid-run start with empty memory; removed
            # characters keep their frozen state (they may return).
            memories.setdefault(profile.id, CharacterMemoryState(owner=profile.id))
        return replace(view, effective_scenario=effective, memories=memories)

    raise ValueError(f"cannot fold node kind {node.kind!r}")


def replay(session: Session, node_id: str) -> WorldStateView:
    """Recompute world state from scratch along the root→node path.

    Backend-free: scores come from the session cache; a miss raises
    SessionIntegrityError because every committed node already paid for its
    scores when it was created.
    """
    path = session.tree.path_to_root(node_id)
    root = path[0]
    assert root.kind == KIND_SCENE_SETUP and isinstance(root.payload, Scenario)
    view = initial_view(root.payload)
    scores = ReplaySource(session)
    for node in path[1:]:
        view = fold_event(view, node, scores)
    return view


def state_at(session: Session, node_id: str) -> WorldStateView:
    """Memoized view: the incrementally maintained state when the node was
    created live, else a replay (e.g. after loading from disk)."""
    session.tree.get(node_id)
    if node_id not in session.state_cache:
        session.state_cache[node_id] = replay(session, node_id)
    return session.state_cache[node_id]


# --- authoring operations ------------------------------------------------------------


def advance(
    session: Session,
    at: str,
    backend: Backend,
    speaker: str | None = None,
) -> str:
    """Generate one autonomous turn under `at` and append it.

    Backend failures surface before anything is appended; advancing from a
    non-leaf forks implicitly. The new node becomes the active head.
    """
    base = state_at(session, at)
    scenario = base.effective_scenario
    cast = scenario.characters
    if speaker is None:
        tail = tuple(
            entry.rendered for entry in base.transcript[-scenario.params.novelty_window:]
        )
        speaker = choose_next_speaker(
            scenario.params.scheduler_policy, cast, base.last_speaker,
            backend, tail, seed=session.seed,
        )
    elif speaker not in scenario.character_ids:
        raise UnknownSpeakerError(f"speaker {speaker!r} is not in the cast")

    profile = scenario.character(speaker)
    request = assemble_prompt(
        profile, scenario.world, base.memories[speaker], scenario.params, seed=session.seed
    )
    result = generate_turn(backend, request)

    node_id = session.tree.append_child(
        at,
        KIND_DIALOGUE,
        DialoguePayload(
            speaker=speaker, speech=result.speech,
            action=result.action, thought=result.thought,
        ),
    )
    session.generation_cache[node_id] = result
    node = session.tree.get(node_id)
    session.state_cache[node_id] = fold_event(base, node, LiveSource(session, backend))
    session.tree.select(node_id)
    return node_id


def stir(session: Session, at: str, text: str, backend: Backend) -> str:
    """Append an author stage direction under `at`; all characters perceive
    it. No turn is generated; only eviction scoring (and any resulting
    understanding notes) runs, so the caches stay replay-complete."""
    if not text.strip():
        raise EmptyStirError("stir text must be non-empty")
    base = state_at(session, at)
    node_id = session.tree.append_child(
        at, KIND_STAGE_DIRECTION, StageDirectionPayload(text=text, origin=ORIGIN_AUTHOR_STIR)
    )
    node = session.tree.get(node_id)
    session.state_cache[node_id] = fold_event(base, node, LiveSource(session, backend))
    session.tree.select(node_id)
    return node_id


def shape(session: Session, at: str, new_scenario: Scenario) -> str:
    """Append a reshape node carrying the diff between the effective
    scenario at `at` and the submitted one. Profiles change from this node
    downward only; sibling branches keep what they had."""
    report = validate_scenario(new_scenario)
    if report:
        raise ScenarioValidationError(report)
    base = state_at(session, at)
    deltas = diff_profiles(base.effective_scenario, new_scenario)
    if not deltas:
        raise NoChangesError("nothing changed")
    for delta in deltas:
        # Shrinking the window mid-run would strand over-full working
        # memories with unscored events; the window is a creation-time knob.
        if delta.target == "world" and "params.window_size" in delta.changed_fields:
            raise ScenarioValidationError(
                ["params.window_size: cannot be reshaped mid-run; set it when creating the session"]
            )
    node_id = session.tree.append_child(at, KIND_RESHAPE, ReshapePayload(tuple(deltas)))
    node = session.tree.get(node_id)
    session.state_cache[node_id] = fold_event(base, node, ReplaySource(session))
    session.tree.select(node_id)
    return node_id


def select(session: Session, node_id: str) -> None:
    """Commit to developing this node's branch: move the active head.
    Nothing is deleted; abandoned branches remain navigable."""
    session.tree.select(node_id)


# --- novelty monitor ------------------------------------------------------------


def _trigram_multiset(text: str) -> Counter:
    normalized = " ".join(text.lower().split())
    return Counter(normalized[i:i + 3] for i in range(len(normalized) - 2))


def _multiset_jaccard(a: Counter, b: Counter) -> float:
    if not a and not b:
        return 1.0
    intersection = sum((a & b).values())
    union = sum((a | b).values())
    return intersection / union if union else 0.0


def novelty_score(texts: Sequence[str]) -> float:
    """1 minus the mean pairwise Jaccard similarity of character-trigram
    multisets (lowercased, whitespace-collapsed). Fewer than two texts
    score 1.0 by convention."""
    if len(texts) < 2:
        return 1.0
    multisets = [_trigram_multiset(t) for t in texts]
    similarities = [_multiset_jaccard(a, b) for a, b in combinations(multisets, 2)]
    return 1.0 - sum(similarities) / len(similarities)


def stir_hint(session: Session, node_id: str) -> StirHint | None:
    """Hint the author to stir when the conversation has gone stale:
    novelty below the floor for at least 3 consecutive dialogue nodes
    ending the path to `node_id`."""
    path = session.tree.path_to_root(node_id)
    root = path[0]
    assert isinstance(root.payload, Scenario)
    params = root.payload.params
    speeches: list[str] = []
    consecutive = 0
    last_novelty = 1.0
    for node in path[1:]:
        if node.kind == KIND_RESHAPE:
            assert isinstance(node.payload, ReshapePayload)
            for delta in node.payload.deltas:
                if delta.target == "world":
                    for field_path, (_, after) in delta.changed_fields.items():
                        if field_path == "params.novelty_window":
                            params = replace(params, novelty_window=after)
                        elif field_path == "params.novelty_floor":
                            params = replace(params, novelty_floor=after)
        elif node.kind == KIND_DIALOGUE:
            assert isinstance(node.payload, DialoguePayload)
            speeches.append(node.payload.speech)
            last_novelty = novelty_score(speeches[-params.novelty_window:])
            consecutive = consecutive + 1 if last_novelty < params.novelty_floor else 0
    if consecutive >= 3:
        return StirHint(at_node=node_id, novelty=last_novelty, consecutive_low=consecutive)
    return None


# --- transcript export ----------------------------------------------------------


def export_transcript(session: Session, node_id: str, include_thoughts: bool = False) -> str:
    """Markdown transcript of the path to `node_id`: a scene header, dialogue
    as "Name: speech" with italicized actions, stage directions italicized
    on their own line, thoughts as blockquotes only when requested."""
    view = state_at(session, node_id)
    world = session.scenario.world
    header = f"# {world.setting}"
    qualifiers = ", ".join(part for part in (world.tone, world.genre) if part)
    if qualifiers:
        header += f" ({qualifiers})"
    parts = [header]
    for entry in view.transcript:
        block = entry.rendered
        if include_thoughts and entry.thought:
            block += f"\n> {entry.thought}"
        parts.append(block)
    return "\n\n".join(parts) + "\n"


# --- canonical serialization of views --------------------------------------------


def view_to_dict(view: WorldStateView) -> dict[str, Any]:
    from .scenario import scenario_to_dict

    return {
        "effective_scenario": scenario_to_dict(view.effective_scenario),
        "memories": {
            char_id: {
                "owner": state.owner,
                "working": [
                    {
                        "source_node": e.source_node,
                        "kind": e.kind,
                        "speaker": e.speaker,
                        "text": e.text,
                    }
                    for e in state.working.slots
                ],
                "long_term": [
                    {
                        "content": item.content,
                        "score": item.score,
                        "source_node": item.source_node,
                        "tags": sorted(item.tags),
                        "acquired_at": item.acquired_at,
                    }
                    for item in state.long_term
                ],
                "understanding": dict(sorted(state.understanding.items())),
            }
            for char_id, state in sorted(view.memories.items())
        },
        "transcript": [
            {"node_id": e.node_id, "rendered": e.rendered, "thought": e.thought}
            for e in view.transcript
        ],
        "last_speaker": view.last_speaker,
    }


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
