"""Branching event store: every story turn is a node in an append-only tree.

Forking is implicit: appending under a node that already has children is
the fork. Nothing is ever deleted; abandoned branches stay navigable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterator

from .errors import DuplicateRootError, NestedPathsError, UnknownNodeError
from .scenario import ReshapeDelta, Scenario

KIND_SCENE_SETUP = "scene_setup"
KIND_DIALOGUE = "dialogue"
KIND_STAGE_DIRECTION = "stage_direction"
KIND_RESHAPE = "reshape"

ORIGIN_AUTHOR_STIR = "author_stir"
ORIGIN_NARRATION = "narration"


@dataclass(frozen=True)
class DialoguePayload:
    speaker: str
    speech: str
    action: str | None = None
    thought: str | None = None


@dataclass(frozen=True)
class StageDirectionPayload:
    text: str
    origin: str = ORIGIN_AUTHOR_STIR


@dataclass(frozen=True)
class ReshapePayload:
    deltas: tuple[ReshapeDelta, ...]


@dataclass(frozen=True)
class TurnNode:
    id: str
    parent: str | None
    kind: str
    payload: Scenario | DialoguePayload | StageDirectionPayload | ReshapePayload
    created_at: int


@dataclass(frozen=True)
class ComparisonView:
    """Two paths decomposed at their fork: shared root context plus suffixes."""

    shared_prefix: tuple[TurnNode, ...]
    suffix_a: tuple[TurnNode, ...]
    suffix_b: tuple[TurnNode, ...]


class BranchTree:
    """Single-writer node tree with an active head. Nodes are immutable."""

    def __init__(self) -> None:
        self.nodes: dict[str, TurnNode] = {}
        self.active_head: str = ""
        self._next_seq = 0
        self.root_id: str = ""

    @classmethod
    def create(cls, scenario: Scenario) -> "BranchTree":
        tree = cls()
        node = TurnNode(id=tree._allocate_id(), parent=None, kind=KIND_SCENE_SETUP,
                        payload=scenario, created_at=0)
        tree.nodes[node.id] = node
        tree.root_id = node.id
        tree.active_head = node.id
        return tree

    def _allocate_id(self) -> str:
        seq = self._next_seq
        self._next_seq += 1
        return f"n{seq:06d}"

    def get(self, node_id: str) -> TurnNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node {node_id!r}") from None

    def append_child(
        self,
        parent: str,
        kind: str,
        payload: DialoguePayload | StageDirectionPayload | ReshapePayload,
    ) -> str:
        if kind == KIND_SCENE_SETUP:
            raise DuplicateRootError("a session has exactly one scene_setup node")
        self.get(parent)
        seq = self._next_seq
        node = TurnNode(id=self._allocate_id(), parent=parent, kind=kind,
                        payload=payload, created_at=seq)
        self.nodes[node.id] = node
        return node.id

    def path_to_root(self, node_id: str) -> list[TurnNode]:
        """Root-first path ending at node_id."""
        path: list[TurnNode] = []
        current: str | None = node_id
        while current is not None:
            node = self.get(current)
            path.append(node)
            current = node.parent
        path.reverse()
        return path

    def lowest_common_ancestor(self, a: str, b: str) -> str:
        ancestors_a = {node.id for node in self.path_to_root(a)}
        deepest = None
        for node in self.path_to_root(b):
            if node.id in ancestors_a:
                deepest = node.id
        assert deepest is not None  # both paths contain the root
        return deepest

    def compare(self, a: str, b: str) -> ComparisonView:
        """Split path(a) and path(b) at their fork point.

        Raises NestedPathsError when one endpoint is an ancestor of the other
        (including a == b): there is no fork to compare, only a single path.
        """
        path_a = self.path_to_root(a)
        path_b = self.path_to_root(b)
        lca = self.lowest_common_ancestor(a, b)
        if lca == a or lca == b:
            raise NestedPathsError("paths are nested")
        split_a = next(i for i, node in enumerate(path_a) if node.id == lca)
        return ComparisonView(
            shared_prefix=tuple(path_a[: split_a + 1]),
            suffix_a=tuple(path_a[split_a + 1:]),
            suffix_b=tuple(path_b[split_a + 1:]),
        )

    def select(self, node_id: str) -> None:
        self.get(node_id)
        self.active_head = node_id

    def children(self, node_id: str) -> list[str]:
        return [n.id for n in self.nodes.values() if n.parent == node_id]

    def __iter__(self) -> Iterator[TurnNode]:
        return iter(sorted(self.nodes.values(), key=lambda n: n.created_at))

    def __len__(self) -> int:
        return len(self.nodes)


# --- serialization -----------------------------------------------------------


def delta_to_dict(delta: ReshapeDelta) -> dict[str, Any]:
    return {
        "target": delta.target,
        "changed_fields": {path: [old, new] for path, (old, new) in delta.changed_fields.items()},
    }


def delta_from_dict(data: dict[str, Any]) -> ReshapeDelta:
    return ReshapeDelta(
        target=data["target"],
        changed_fields={path: (pair[0], pair[1]) for path, pair in data["changed_fields"].items()},
    )


def node_to_dict(node: TurnNode) -> dict[str, Any]:
    from .scenario import scenario_to_dict

    payload: dict[str, Any]
    if node.kind == KIND_SCENE_SETUP:
        assert isinstance(node.payload, Scenario)
        payload = {"scenario": scenario_to_dict(node.payload)}
    elif node.kind == KIND_DIALOGUE:
        assert isinstance(node.payload, DialoguePayload)
        payload = {
            "speaker": node.payload.speaker,
            "speech": node.payload.speech,
            "action": node.payload.action,
            "thought": node.payload.thought,
        }
    elif node.kind == KIND_STAGE_DIRECTION:
        assert isinstance(node.payload, StageDirectionPayload)
        payload = {"text": node.payload.text, "origin": node.payload.origin}
    elif node.kind == KIND_RESHAPE:
        assert isinstance(node.payload, ReshapePayload)
        payload = {"deltas": [delta_to_dict(d) for d in node.payload.deltas]}
    else:
        raise ValueError(f"unknown node kind {node.kind!r}")

    return {
        "id": node.id,
        "parent": node.parent,
        "kind": node.kind,
        "created_at": node.created_at,
        "payload": payload,
    }


def node_from_dict(data: dict[str, Any]) -> TurnNode:
    from .scenario import scenario_from_dict

    kind = data["kind"]
    raw = data["payload"]
    payload: Scenario | DialoguePayload | StageDirectionPayload | ReshapePayload
    if kind == KIND_SCENE_SETUP:
        payload = scenario_from_dict(raw["scenario"])
    elif kind == KIND_DIALOGUE:
        payload = DialoguePayload(
            speaker=raw["speaker"], speech=raw["speech"],
            action=raw.get("action"), thought=raw.get("thought"),
        )
    elif kind == KIND_STAGE_DIRECTION:
        payload = StageDirectionPayload(text=raw["text"], origin=raw["origin"])
    elif kind == KIND_RESHAPE:
        payload = ReshapePayload(deltas=tuple(delta_from_dict(d) for d in raw["deltas"]))
    else:
        raise ValueError(f"unknown node kind {kind!r}")

    return TurnNode(
        id=data["id"], parent=data["parent"], kind=kind,
        payload=payload, created_at=data["created_at"],
    )


def tree_to_dicts(tree: BranchTree) -> list[dict[str, Any]]:
    return [node_to_dict(node) for node in tree]


def tree_from_dicts(node_dicts: list[dict[str, Any]], active_head: str) -> BranchTree:
    tree = BranchTree()
    max_seq = -1
    for data in node_dicts:
        node = node_from_dict(data)
        tree.nodes[node.id] = node
        if node.parent is None:
            tree.root_id = node.id
        max_seq = max(max_seq, node.created_at)
    tree._next_seq = max_seq + 1
    tree.active_head = active_head
    if active_head not in tree.nodes:
        raise UnknownNodeError(f"active head {active_head!r} not in node set")
    return tree


def audit_tree(tree: BranchTree) -> list[str]:
    """Full-tree structural audit used by tests: single root, acyclic,
    no orphans, created_at strictly increasing along every path."""
    problems: list[str] = []
    roots = [n for n in tree.nodes.values() if n.parent is None]
    if len(roots) != 1:
        problems.append(f"expected exactly one root, found {len(roots)}")
        return problems
    if roots[0].kind != KIND_SCENE_SETUP:
        problems.append(f"root kind is {roots[0].kind!r}")

    reachable: set[str] = set()
    stack = [roots[0].id]
    while stack:
        current = stack.pop()
        if current in reachable:
            problems.append(f"cycle reaching {current}")
            return problems
        reachable.add(current)
        stack.extend(tree.children(current))
    if reachable != set(tree.nodes):
        problems.append(f"orphan nodes: {sorted(set(tree.nodes) - reachable)}")

    for node in tree.nodes.values():
        if node.parent is not None and tree.nodes[node.parent].created_at >= node.created_at:
            problems.append(f"created_at not increasing at {node.id}")
    if tree.active_head not in tree.nodes:
        problems.append(f"active head {tree.active_head!r} missing")
    return problems
