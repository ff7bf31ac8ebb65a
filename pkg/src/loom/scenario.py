"""World configuration, character profiles, and reshape deltas.

Scenarios are immutable values: reshaping mid-run produces deltas that live
in the timeline, never edits in place.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .errors import ScenarioFormatError

SCHEDULER_POLICIES = ("round_robin", "director")

# Character ids are slugs so they survive renames and stay safe inside
# cache keys and whole-word text matching.
_SLUG_CHARS = set("abcdefghijklmnopqrstuvwxyz0123456789_-")


@dataclass(frozen=True)
class WorldConfig:
    setting: str
    tone: str = ""
    genre: str = ""


@dataclass(frozen=True)
class CharacterProfile:
    id: str
    name: str
    personality: str = ""
    goals: tuple[str, ...] = ()
    flaws: tuple[str, ...] = ()
    relationships: dict[str, str] = field(default_factory=dict)
    secrets: tuple[str, ...] = ()


@dataclass(frozen=True)
class SimulationParams:
    window_size: int = 5
    promotion_threshold: float = 0.6
    recall_k: int = 10
    scheduler_policy: str = "round_robin"
    novelty_window: int = 6
    novelty_floor: float = 0.35


@dataclass(frozen=True)
class Scenario:
    world: WorldConfig
    characters: tuple[CharacterProfile, ...]
    params: SimulationParams = field(default_factory=SimulationParams)

    def character(self, char_id: str) -> CharacterProfile:
        for profile in self.characters:
            if profile.id == char_id:
                return profile
        raise KeyError(char_id)

    @property
    def character_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.characters)


@dataclass(frozen=True)
class ReshapeDelta:
    """One target's changed fields: path -> (old value, new value).

    target is a character id, or "world" for setting/tone/genre,
    "params.*" paths, and cast-order changes. Whole-character additions and
    removals use the "profile" path with None on the absent side.
    """

    target: str
    changed_fields: dict[str, tuple[Any, Any]]


def _is_slug(value: str) -> bool:
    return bool(value) and all(ch in _SLUG_CHARS for ch in value)


def validate_scenario(scenario: Scenario) -> list[str]:
    """Collect every invariant violation; an empty report means valid.

    Validation never raises: callers decide whether a non-empty report
    aborts (service returns it as a 400 body, the CLI prints it).
    """
    report: list[str] = []

    if not scenario.world.setting.strip():
        report.append("world.setting: must be non-empty")

    if len(scenario.characters) < 2:
        report.append(f"characters: need >= 2, got {len(scenario.characters)}")

    seen_ids: set[str] = set()
    for i, profile in enumerate(scenario.characters):
        prefix = f"characters[{i}]"
        if not _is_slug(profile.id):
            report.append(f"{prefix}.id: must be a non-empty slug ([a-z0-9_-]), got {profile.id!r}")
        if profile.id in seen_ids:
            report.append(f"{prefix}.id: duplicate id {profile.id!r}")
        seen_ids.add(profile.id)
        if not profile.name.strip():
            report.append(f"{prefix}.name: must be non-empty")

    cast_ids = {p.id for p in scenario.characters}
    for i, profile in enumerate(scenario.characters):
        for other_id in profile.relationships:
            if other_id not in cast_ids:
                report.append(
                    f"characters[{i}].relationships.{other_id}: unknown character id {other_id!r}"
                )

    params = scenario.params
    if params.window_size < 1:
        report.append(f"params.window_size: must be >= 1, got {params.window_size}")
    if not 0.0 <= params.promotion_threshold <= 1.0:
        report.append(f"params.promotion_threshold: must be in [0, 1], got {params.promotion_threshold}")
    if params.recall_k < 0:
        report.append(f"params.recall_k: must be >= 0, got {params.recall_k}")
    if params.scheduler_policy not in SCHEDULER_POLICIES:
        report.append(
            f"params.scheduler_policy: must be one of {', '.join(SCHEDULER_POLICIES)},"
            f" got {params.scheduler_policy!r}"
        )
    if params.novelty_window < 1:
        report.append(f"params.novelty_window: must be >= 1, got {params.novelty_window}")
    if not 0.0 <= params.novelty_floor <= 1.0:
        report.append(f"params.novelty_floor: must be in [0, 1], got {params.novelty_floor}")

    return report


# --- structural diff / apply -------------------------------------------------

_WORLD_PATHS = ("setting", "tone", "genre")
_PARAM_PATHS = (
    "window_size",
    "promotion_threshold",
    "recall_k",
    "scheduler_policy",
    "novelty_window",
    "novelty_floor",
)
_CHARACTER_PATHS = ("name", "personality", "goals", "flaws", "relationships", "secrets")


def _profile_field(profile: CharacterProfile, path: str) -> Any:
    value = getattr(profile, path)
    if isinstance(value, tuple):
        return list(value)
    if isinstance(value, dict):
        return dict(value)
    return value


def diff_profiles(old: Scenario, new: Scenario) -> list[ReshapeDelta]:
    """Structural diff; applying the result to `old` reproduces `new` exactly."""
    deltas: list[ReshapeDelta] = []
    world_changes: dict[str, tuple[Any, Any]] = {}

    for path in _WORLD_PATHS:
        before, after = getattr(old.world, path), getattr(new.world, path)
        if before != after:
            world_changes[path] = (before, after)
    for path in _PARAM_PATHS:
        before, after = getattr(old.params, path), getattr(new.params, path)
        if before != after:
            world_changes[f"params.{path}"] = (before, after)

    old_by_id = {p.id: p for p in old.characters}
    new_by_id = {p.id: p for p in new.characters}

    for char_id, profile in old_by_id.items():
        if char_id not in new_by_id:
            deltas.append(ReshapeDelta(char_id, {"profile": (_profile_to_dict(profile), None)}))
    for char_id, profile in new_by_id.items():
        if char_id not in old_by_id:
            deltas.append(ReshapeDelta(char_id, {"profile": (None, _profile_to_dict(profile))}))
            continue
        changes: dict[str, tuple[Any, Any]] = {}
        previous = old_by_id[char_id]
        for path in _CHARACTER_PATHS:
            before, after = _profile_field(previous, path), _profile_field(profile, path)
            if before != after:
                changes[path] = (before, after)
        if changes:
            deltas.append(ReshapeDelta(char_id, changes))

    # Cast order beyond "survivors keep their order, additions append".
    surviving = [cid for cid in old.character_ids if cid in new_by_id]
    added = [cid for cid in new.character_ids if cid not in old_by_id]
    if list(new.character_ids) != surviving + added:
        world_changes["characters_order"] = (list(old.character_ids), list(new.character_ids))

    if world_changes:
        deltas.insert(0, ReshapeDelta("world", world_changes))
    return deltas


def apply_deltas(scenario: Scenario, deltas: list[ReshapeDelta]) -> Scenario:
    """Apply reshape deltas, returning a new scenario. Inverse of diff_profiles."""
    world = scenario.world
    params = scenario.params
    characters = list(scenario.characters)
    order: list[str] | None = None

    for delta in deltas:
        if not delta.changed_fields:
            raise ValueError(f"delta for {delta.target!r} has no changed fields")
        if delta.target == "world":
            for path, (_, after) in delta.changed_fields.items():
                if path in _WORLD_PATHS:
                    world = replace(world, **{path: after})
                elif path.startswith("params."):
                    name = path[len("params."):]
                    if name not in _PARAM_PATHS:
                        raise ValueError(f"unknown params field path {path!r}")
                    params = replace(params, **{name: after})
                elif path == "characters_order":
                    order = list(after)
                else:
                    raise ValueError(f"unknown world field path {path!r}")
            continue

        index = next((i for i, p in enumerate(characters) if p.id == delta.target), None)
        for path, (_, after) in delta.changed_fields.items():
            if path == "profile":
                if after is None:
                    if index is None:
                        raise ValueError(f"cannot remove unknown character {delta.target!r}")
                    characters.pop(index)
                else:
                    profile = _profile_from_dict(after, where=f"delta[{delta.target}]")
                    if index is None:
                        characters.append(profile)
                    else:
                        characters[index] = profile
            elif path in _CHARACTER_PATHS:
                if index is None:
                    raise ValueError(f"delta targets unknown character {delta.target!r}")
                value: Any = after
                if path in ("goals", "flaws", "secrets"):
                    value = tuple(after)
                elif path == "relationships":
                    value = dict(after)
                characters[index] = replace(characters[index], **{path: value})
            else:
                raise ValueError(f"unknown character field path {path!r}")

    if order is not None:
        by_id = {p.id: p for p in characters}
        if set(order) != set(by_id):
            raise ValueError("characters_order does not match the resulting cast")
        characters = [by_id[cid] for cid in order]

    return Scenario(world=world, characters=tuple(characters), params=params)


# --- JSON document -----------------------------------------------------------


def _reject_unknown(data: dict, allowed: tuple[str, ...], where: str) -> None:
    unknown = sorted(set(data) - set(allowed))
    if unknown:
        raise ScenarioFormatError(f"{where}: unknown keys {unknown}")


def _expect_str(data: dict, key: str, where: str, default: str | None = None) -> str:
    if key not in data:
        if default is not None:
            return default
        raise ScenarioFormatError(f"{where}.{key}: missing required field")
    value = data[key]
    if not isinstance(value, str):
        raise ScenarioFormatError(f"{where}.{key}: expected string, got {type(value).__name__}")
    return value


def _expect_str_list(data: dict, key: str, where: str) -> tuple[str, ...]:
    value = data.get(key, [])
    if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
        raise ScenarioFormatError(f"{where}.{key}: expected list of strings")
    return tuple(value)


def _profile_to_dict(profile: CharacterProfile) -> dict[str, Any]:
    return {
        "id": profile.id,
        "name": profile.name,
        "personality": profile.personality,
        "goals": list(profile.goals),
        "flaws": list(profile.flaws),
        "relationships": dict(profile.relationships),
        "secrets": list(profile.secrets),
    }


def _profile_from_dict(data: Any, where: str) -> CharacterProfile:
    if not isinstance(data, dict):
        raise ScenarioFormatError(f"{where}: expected object, got {type(data).__name__}")
    _reject_unknown(data, ("id", "name", "personality", "goals", "flaws", "relationships", "secrets"), where)
    relationships = data.get("relationships", {})
    if not isinstance(relationships, dict) or any(
        not isinstance(k, str) or not isinstance(v, str) for k, v in relationships.items()
    ):
        raise ScenarioFormatError(f"{where}.relationships: expected object of string -> string")
    return CharacterProfile(
        id=_expect_str(data, "id", where),
        name=_expect_str(data, "name", where),
        personality=_expect_str(data, "personality", where, default=""),
        goals=_expect_str_list(data, "goals", where),
        flaws=_expect_str_list(data, "flaws", where),
        relationships=dict(relationships),
        secrets=_expect_str_list(data, "secrets", where),
    )


def _params_from_dict(data: Any) -> SimulationParams:
    if not isinstance(data, dict):
        raise ScenarioFormatError(f"params: expected object, got {type(data).__name__}")
    _reject_unknown(
        data,
        ("window_size", "promotion_threshold", "recall_k", "scheduler_policy", "novelty_window", "novelty_floor"),
        "params",
    )
    defaults = SimulationParams()

    def _int(key: str, fallback: int) -> int:
        value = data.get(key, fallback)
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioFormatError(f"params.{key}: expected integer")
        return value

    def _real(key: str, fallback: float) -> float:
        value = data.get(key, fallback)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioFormatError(f"params.{key}: expected number")
        return float(value)

    policy = data.get("scheduler_policy", defaults.scheduler_policy)
    if not isinstance(policy, str):
        raise ScenarioFormatError("params.scheduler_policy: expected string")

    return SimulationParams(
        window_size=_int("window_size", defaults.window_size),
        promotion_threshold=_real("promotion_threshold", defaults.promotion_threshold),
        recall_k=_int("recall_k", defaults.recall_k),
        scheduler_policy=policy,
        novelty_window=_int("novelty_window", defaults.novelty_window),
        novelty_floor=_real("novelty_floor", defaults.novelty_floor),
    )


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    params = scenario.params
    return {
        "world": {
            "setting": scenario.world.setting,
            "tone": scenario.world.tone,
            "genre": scenario.world.genre,
        },
        "characters": [_profile_to_dict(p) for p in scenario.characters],
        "params": {
            "window_size": params.window_size,
            "promotion_threshold": params.promotion_threshold,
            "recall_k": params.recall_k,
            "scheduler_policy": params.scheduler_policy,
            "novelty_window": params.novelty_window,
            "novelty_floor": params.novelty_floor,
        },
    }


def scenario_from_dict(data: Any) -> Scenario:
    """Parse a scenario document. Strict: unknown keys are rejected everywhere."""
    if not isinstance(data, dict):
        raise ScenarioFormatError(f"scenario: expected object, got {type(data).__name__}")
    _reject_unknown(data, ("world", "characters", "params"), "scenario")

    world_data = data.get("world")
    if not isinstance(world_data, dict):
        raise ScenarioFormatError("world: missing or not an object")
    _reject_unknown(world_data, ("setting", "tone", "genre"), "world")
    world = WorldConfig(
        setting=_expect_str(world_data, "setting", "world"),
        tone=_expect_str(world_data, "tone", "world", default=""),
        genre=_expect_str(world_data, "genre", "world", default=""),
    )

    characters_data = data.get("characters")
    if not isinstance(characters_data, list):
        raise ScenarioFormatError("characters: missing or not an array")
    characters = tuple(
        _profile_from_dict(entry, where=f"characters[{i}]") for i, entry in enumerate(characters_data)
    )

    params = _params_from_dict(data["params"]) if "params" in data else SimulationParams()
    return Scenario(world=world, characters=characters, params=params)


def load_scenario_file(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioFormatError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(data)
