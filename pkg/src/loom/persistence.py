"""Durable session documents: one JSON file per session, written atomically.

Every committed mutation is saved with the write-temp/fsync/rename pattern,
so a crash leaves either the old document or the new one, never a torn
file. All caches are persisted; loading a session never touches a backend.
"""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Any

from .errors import PersistenceError
from .generation import GenerationResult
from .orchestrator import Session
from .scenario import scenario_from_dict, scenario_to_dict
from .timeline import tree_from_dicts, tree_to_dicts

SCHEMA_VERSION = 1


def session_to_document(session: Session) -> dict[str, Any]:
    return {
        "schema_version": SCHEMA_VERSION,
        "id": session.id,
        "seed": session.seed,
        "scenario": scenario_to_dict(session.scenario),
        "active_head": session.tree.active_head,
        "nodes": tree_to_dicts(session.tree),
        "score_cache": {
            f"{char_id}|{node_id}": score
            for (char_id, node_id), score in sorted(session.score_cache.items())
        },
        "note_cache": {
            f"{char_id}|{node_id}|{other_id}": note
            for (char_id, node_id, other_id), note in sorted(session.note_cache.items())
        },
        "generation_cache": {
            node_id: {"speech": r.speech, "action": r.action, "thought": r.thought}
            for node_id, r in sorted(session.generation_cache.items())
        },
    }


def session_from_document(data: Any) -> Session:
    if not isinstance(data, dict):
        raise PersistenceError("session document is not an object")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise PersistenceError(f"unknown schema_version {version!r}")
    try:
        scenario = scenario_from_dict(data["scenario"])
        tree = tree_from_dicts(data["nodes"], data["active_head"])
        score_cache: dict[tuple[str, str], float] = {}
        for key, score in data["score_cache"].items():
            char_id, node_id = key.split("|", 1)
            score_cache[(char_id, node_id)] = float(score)
        note_cache: dict[tuple[str, str, str], str] = {}
        for key, note in data["note_cache"].items():
            char_id, node_id, other_id = key.split("|", 2)
            note_cache[(char_id, node_id, other_id)] = note
        generation_cache = {
            node_id: GenerationResult(
                speech=entry["speech"], action=entry["action"], thought=entry["thought"]
            )
            for node_id, entry in data["generation_cache"].items()
        }
        return Session.from_parts(
            session_id=data["id"],
            scenario=scenario,
            seed=data["seed"],
            tree=tree,
            score_cache=score_cache,
            note_cache=note_cache,
            generation_cache=generation_cache,
        )
    except PersistenceError:
        raise
    except Exception as exc:
        raise PersistenceError(f"malformed session document: {exc}") from exc


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", encoding="utf-8") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except OSError as exc:
        try:
            tmp.unlink(missing_ok=True)
        except OSError:
            pass
        raise PersistenceError(f"cannot write {path}: {exc}") from exc


def session_path(data_dir: Path, session_id: str) -> Path:
    return data_dir / f"{session_id}.json"


def save_session(data_dir: Path, session: Session) -> Path:
    try:
        data_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PersistenceError(f"cannot create data dir {data_dir}: {exc}") from exc
    path = session_path(data_dir, session.id)
    document = session_to_document(session)
    atomic_write_text(path, json.dumps(document, ensure_ascii=False, indent=1))
    return path


def load_session(data_dir: Path, session_id: str) -> Session:
    path = session_path(data_dir, session_id)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise PersistenceError(f"cannot read session {session_id!r}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PersistenceError(f"session {session_id!r} document is corrupted: {exc}") from exc
    session = session_from_document(data)
    if session.id != session_id:
        raise PersistenceError(
            f"session document {path} claims id {session.id!r}, expected {session_id!r}"
        )
    return session


def list_session_ids(data_dir: Path) -> list[str]:
    if not data_dir.is_dir():
        return []
    return sorted(p.stem for p in data_dir.glob("*.json"))
