"""Decision tree model: validation, cleartext evaluation, synthesis, JSON.

Trees are binary: each decision node compares one attribute against a
threshold and routes left on x[attr] <= threshold.  Leaves carry class
values.  Model depth counts comparison levels: a balanced tree of depth d
in the benchmark convention has 2^(d-1) - 1 decision nodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class TreeNode:
    node_id: int
    kind: str  # "decision" | "leaf"
    attr: Optional[int] = None
    threshold: Optional[int] = None
    left: Optional[int] = None
    right: Optional[int] = None
    value: Optional[int] = None


@dataclass
class DecisionTreeModel:
    precision: int
    num_attributes: int
    root: int
    nodes: dict[int, TreeNode] = field(default_factory=dict)

    @property
    def decision_ids(self) -> list[int]:
        return [i for i, nd in sorted(self.nodes.items()) if nd.kind == "decision"]

    @property
    def num_decision_nodes(self) -> int:
        return len(self.decision_ids)

    def leaves_in_order(self) -> list[TreeNode]:
        """Leaves left to right; the canonical response order."""
        out: list[TreeNode] = []

        def walk(node_id: int) -> None:
            node = self.nodes[node_id]
            if node.kind == "leaf":
                out.append(node)
            else:
                walk(node.left)
                walk(node.right)

        walk(self.root)
        return out

    def leaf_paths(self) -> Iterator[tuple[TreeNode, list[tuple[int, str]]]]:
        """(leaf, [(decision id, 'left'|'right'), ...]) in canonical order."""

        def walk(node_id: int, path: list[tuple[int, str]]):
            node = self.nodes[node_id]
            if node.kind == "leaf":
                yield node, path
            else:
                yield from walk(node.left, path + [(node.node_id, "left")])
                yield from walk(node.right, path + [(node.node_id, "right")])

        yield from walk(self.root, [])

    def depth(self) -> int:
        def walk(node_id: int) -> int:
            node = self.nodes[node_id]
            if node.kind == "leaf":
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)


def validate_model(model: DecisionTreeModel) -> list[str]:
    """All invariant violations; an empty list means the model is usable."""
    issues: list[str] = []
    limit = 1 << model.precision
    if model.root not in model.nodes:
        return [f"root {model.root} is not a node"]
    for node_id, node in model.nodes.items():
        if node.node_id != node_id:
            issues.append(f"node {node_id}: id field mismatch")
        if node.kind == "decision":
            if node.attr is None or not 0 <= node.attr < model.num_attributes:
                issues.append(f"node {node_id}: attribute index {node.attr} out of range")
            if node.threshold is None or not 0 <= node.threshold < limit:
                issues.append(f"node {node_id}: threshold overflow ({node.threshold})")
            for child in (node.left, node.right):
                if child is None or child not in model.nodes:
                    issues.append(f"node {node_id}: dangling child {child}")
        elif node.kind == "leaf":
            if node.value is None or node.value < 0:
                issues.append(f"node {node_id}: missing class value")
        else:
            issues.append(f"node {node_id}: unknown kind {node.kind!r}")

    # Reachability walk detecting cycles and shared children.
    seen: set[int] = set()
    stack = [model.root]
    ok = True
    while stack and ok:
        cur = stack.pop()
        if cur in seen:
            issues.append(f"cycle or shared node at {cur}")
            ok = False
            break
        seen.add(cur)
        node = model.nodes.get(cur)
        if node is None or node.kind != "decision":
            continue
        if node.left in model.nodes and node.right in model.nodes:
            stack.extend((node.left, node.right))
    return issues


def eval_clear(model: DecisionTreeModel, attrs: Sequence[int]) -> int:
    """Cleartext inference; the oracle for every private evaluation."""
    node = model.nodes[model.root]
    while node.kind == "decision":
        if node.attr >= len(attrs):
            raise IndexError(f"attribute index {node.attr} out of range")
        node = model.nodes[node.left if attrs[node.attr] <= node.threshold else node.right]
    return node.value


def synth_tree(
    depth: int,
    precision: int,
    num_attributes: int,
    seed: int,
    num_classes: int = 2,
) -> DecisionTreeModel:
    """Reproducible balanced tree with uniform thresholds and attributes.

    `depth` follows the benchmark convention: depth d means d-1 comparison
    levels, so depth 6 gives 31 decision nodes.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    rng = np.random.default_rng(seed)
    levels = depth - 1
    nodes: dict[int, TreeNode] = {}
    counter = 0

    def build(level: int) -> int:
        nonlocal counter
        node_id = counter
        counter += 1
        if level == levels:
            nodes[node_id] = TreeNode(
                node_id, "leaf", value=int(rng.integers(0, num_classes))
            )
        else:
            attr = int(rng.integers(0, num_attributes))
            thr = int(rng.integers(0, 1 << precision))
            left = build(level + 1)
            right = build(level + 1)
            nodes[node_id] = TreeNode(node_id, "decision", attr, thr, left, right)
        return node_id

    root = build(0)
    return DecisionTreeModel(precision, num_attributes, root, nodes)


def tree_to_dict(model: DecisionTreeModel) -> dict:
    nodes = []
    for node_id, node in sorted(model.nodes.items()):
        if node.kind == "decision":
            nodes.append(
                {
                    "id": node_id,
                    "kind": "decision",
                    "attr": node.attr,
                    "threshold": node.threshold,
                    "left": node.left,
                    "right": node.right,
                }
            )
        else:
            nodes.append({"id": node_id, "kind": "leaf", "value": node.value})
    return {
        "precision": model.precision,
        "num_attributes": model.num_attributes,
        "root": model.root,
        "nodes": nodes,
    }


def tree_from_dict(data: dict) -> DecisionTreeModel:
    nodes = {}
    for entry in data["nodes"]:
        nodes[entry["id"]] = TreeNode(
            node_id=entry["id"],
            kind=entry["kind"],
            attr=entry.get("attr"),
            threshold=entry.get("threshold"),
            left=entry.get("left"),
            right=entry.get("right"),
            value=entry.get("value"),
        )
    return DecisionTreeModel(
        precision=data["precision"],
        num_attributes=data["num_attributes"],
        root=data["root"],
        nodes=nodes,
    )


def save_tree(model: DecisionTreeModel, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(tree_to_dict(model), fh, indent=1)


def load_tree(path: str) -> DecisionTreeModel:
    with open(path) as fh:
        return tree_from_dict(json.load(fh))
