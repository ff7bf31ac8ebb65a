from __future__ import annotations

import random

import pytest

from loom.errors import DuplicateRootError, NestedPathsError, UnknownNodeError
from loom.timeline import (
    KIND_DIALOGUE,
    KIND_SCENE_SETUP,
    KIND_STAGE_DIRECTION,
    BranchTree,
    DialoguePayload,
    StageDirectionPayload,
    audit_tree,
    node_from_dict,
    node_to_dict,
    tree_from_dicts,
    tree_to_dicts,
)
from conftest import make_scenario


# --- brute-force oracles -------------------------------------------------------


def oracle_path(tree: BranchTree, node_id: str) -> list[str]:
    ids = []
    current = node_id
    while current is not None:
        ids.append(current)
        current = tree.nodes[current].parent
    return list(reversed(ids))


def oracle_lca(tree: BranchTree, a: str, b: str) -> str:
    path_a = oracle_path(tree, a)
    shared = set(path_a) & set(oracle_path(tree, b))
    # deepest element of the intersection, measured along path(a)
    return max(shared, key=path_a.index)


def random_tree(rng: random.Random, n_nodes: int) -> BranchTree:
    tree = BranchTree.create(make_scenario())
    ids = [tree.root_id]
    for i in range(n_nodes - 1):
        parent = rng.choice(ids)
        if rng.random() < 0.5:
            node_id = tree.append_child(
                parent, KIND_DIALOGUE, DialoguePayload(speaker="cal", speech=f"line {i}")
            )
        else:
            node_id = tree.append_child(
                parent, KIND_STAGE_DIRECTION, StageDirectionPayload(text=f"event {i}")
            )
        ids.append(node_id)
    return tree


# --- append --------------------------------------------------------------------


def test_append_dialogue_under_root():
    tree = BranchTree.create(make_scenario())
    child = tree.append_child(tree.root_id, KIND_DIALOGUE, DialoguePayload("cal", "hello"))
    assert [n.id for n in tree.path_to_root(child)] == [tree.root_id, child]


def test_two_children_fork_shares_prefix():
    tree = BranchTree.create(make_scenario())
    n = tree.append_child(tree.root_id, KIND_DIALOGUE, DialoguePayload("cal", "hello"))
    x = tree.append_child(n, KIND_STAGE_DIRECTION, StageDirectionPayload(text="a letter falls"))
    y = tree.append_child(n, KIND_STAGE_DIRECTION, StageDirectionPayload(text="the power goes out"))
    assert sorted(tree.children(n)) == sorted([x, y])
    path_x = [node.id for node in tree.path_to_root(x)]
    path_y = [node.id for node in tree.path_to_root(y)]
    assert path_x[:-1] == path_y[:-1] == [tree.root_id, n]


def test_append_under_unknown_parent():
    tree = BranchTree.create(make_scenario())
    with pytest.raises(UnknownNodeError, match="unknown"):
        tree.append_child("n999999", KIND_DIALOGUE, DialoguePayload("cal", "hi"))


def test_second_root_rejected():
    tree = BranchTree.create(make_scenario())
    with pytest.raises(DuplicateRootError):
        tree.append_child(tree.root_id, KIND_SCENE_SETUP, DialoguePayload("cal", "hi"))


# --- path_to_root ----------------------------------------------------------------


def test_path_of_root_is_itself():
    tree = BranchTree.create(make_scenario())
    assert [n.id for n in tree.path_to_root(tree.root_id)] == [tree.root_id]


def test_linear_chain_path():
    tree = BranchTree.create(make_scenario())
    a = tree.append_child(tree.root_id, KIND_DIALOGUE, DialoguePayload("cal", "one"))
    b = tree.append_child(a, KIND_DIALOGUE, DialoguePayload("mira", "two"))
    assert [n.id for n in tree.path_to_root(b)] == [tree.root_id, a, b]


def test_path_matches_oracle_on_random_tree():
    rng = random.Random(50)
    tree = random_tree(rng, 50)
    for node_id in tree.nodes:
        assert [n.id for n in tree.path_to_root(node_id)] == oracle_path(tree, node_id)
    with pytest.raises(UnknownNodeError):
        tree.path_to_root("nope")


# --- lowest common ancestor --------------------------------------------------------


def test_lca_reflexive_and_root():
    rng = random.Random(7)
    tree = random_tree(rng, 20)
    some = rng.choice(list(tree.nodes))
    assert tree.lowest_common_ancestor(some, some) == some
    assert tree.lowest_common_ancestor(tree.root_id, some) == tree.root_id


def test_lca_matches_oracle_on_random_pairs():
    rng = random.Random(100)
    tree = random_tree(rng, 100)
    ids = list(tree.nodes)
    for _ in range(200):
        a, b = rng.choice(ids), rng.choice(ids)
        assert tree.lowest_common_ancestor(a, b) == oracle_lca(tree, a, b)


# --- compare -----------------------------------------------------------------------


def test_compare_siblings_minimal_fork():
    tree = BranchTree.create(make_scenario())
    n = tree.append_child(tree.root_id, KIND_DIALOGUE, DialoguePayload("cal", "hello"))
    x = tree.append_child(n, KIND_DIALOGUE, DialoguePayload("mira", "yes"))
    y = tree.append_child(n, KIND_DIALOGUE, DialoguePayload("erik", "no"))
    view = tree.compare(x, y)
    assert [node.id for node in view.shared_prefix] == [tree.root_id, n]
    assert [node.id for node in view.suffix_a] == [x]
    assert [node.id for node in view.suffix_b] == [y]


def test_compare_nested_pair_is_an_error():
    tree = BranchTree.create(make_scenario())
    a = tree.append_child(tree.root_id, KIND_DIALOGUE, DialoguePayload("cal", "one"))
    b = tree.append_child(a, KIND_DIALOGUE, DialoguePayload("mira", "two"))
    with pytest.raises(NestedPathsError, match="paths are nested"):
        tree.compare(a, b)
    with pytest.raises(NestedPathsError):
        tree.compare(b, a)
    with pytest.raises(NestedPathsError):
        tree.compare(a, a)


def test_compare_reassembles_exact_paths_on_random_trees():
    rng = random.Random(4242)
    tree = random_tree(rng, 80)
    ids = list(tree.nodes)
    checked = 0
    while checked < 100:
        a, b = rng.choice(ids), rng.choice(ids)
        lca = oracle_lca(tree, a, b)
        if lca in (a, b):
            continue
        view = tree.compare(a, b)
        prefix = [n.id for n in view.shared_prefix]
        assert prefix + [n.id for n in view.suffix_a] == oracle_path(tree, a)
        assert prefix + [n.id for n in view.suffix_b] == oracle_path(tree, b)
        assert prefix[-1] == lca
        assert not {n.id for n in view.suffix_a} & {n.id for n in view.suffix_b}
        checked += 1


# --- select ----------------------------------------------------------------------


def test_select_moves_active_head_and_keeps_nodes():
    tree = BranchTree.create(make_scenario())
    a = tree.append_child(tree.root_id, KIND_DIALOGUE, DialoguePayload("cal", "one"))
    b = tree.append_child(tree.root_id, KIND_DIALOGUE, DialoguePayload("mira", "two"))
    before = set(tree.nodes)
    tree.select(a)
    assert tree.active_head == a
    tree.select(tree.root_id)
    assert tree.active_head == tree.root_id
    tree.select(b)
    assert tree.active_head == b
    assert set(tree.nodes) == before
    with pytest.raises(UnknownNodeError):
        tree.select("missing")


def test_append_extends_parent_path():
    rng = random.Random(8)
    tree = random_tree(rng, 30)
    parent = rng.choice(list(tree.nodes))
    before = [n.id for n in tree.path_to_root(parent)]
    child = tree.append_child(parent, KIND_DIALOGUE, DialoguePayload("cal", "more"))
    assert [n.id for n in tree.path_to_root(child)] == before + [child]


def test_audit_holds_after_every_mutation():
    rng = random.Random(99)
    tree = BranchTree.create(make_scenario())
    ids = [tree.root_id]
    for i in range(60):
        parent = rng.choice(ids)
        node_id = tree.append_child(parent, KIND_DIALOGUE, DialoguePayload("cal", f"l{i}"))
        ids.append(node_id)
        if rng.random() < 0.2:
            tree.select(rng.choice(ids))
        assert audit_tree(tree) == []


def test_created_at_strictly_increases_along_paths():
    rng = random.Random(11)
    tree = random_tree(rng, 40)
    for node_id in tree.nodes:
        path = tree.path_to_root(node_id)
        stamps = [n.created_at for n in path]
        assert stamps == sorted(stamps)
        assert len(set(stamps)) == len(stamps)


# --- serialization -----------------------------------------------------------------


def test_node_and_tree_round_trip():
    rng = random.Random(31)
    tree = random_tree(rng, 25)
    tree.select(rng.choice(list(tree.nodes)))
    dicts = tree_to_dicts(tree)
    for data in dicts:
        assert node_to_dict(node_from_dict(data)) == data
    rebuilt = tree_from_dicts(dicts, tree.active_head)
    assert rebuilt.nodes == tree.nodes
    assert rebuilt.active_head == tree.active_head
    assert rebuilt.root_id == tree.root_id
    # new appends continue the sequence without collision
    new_id = rebuilt.append_child(rebuilt.root_id, KIND_DIALOGUE, DialoguePayload("cal", "next"))
    assert new_id not in tree.nodes
