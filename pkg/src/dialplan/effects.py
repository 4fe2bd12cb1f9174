"""Semantics of effect trees: realizations, resolution, and state update.

A realization picks exactly one child at every oneof reached from the root
and collects the add/del literal sets along the way. The recursion is:
leaf contributes its literal; ``and`` unions its children; ``oneof``
contributes only the selected child.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ModelError
from .pddl import AND, LEAF, ONEOF, EffectNode, iter_nodes, oneof_key, outcome_label


@dataclass(frozen=True, slots=True)
class Realization:
    """One resolved outcome of an effect tree.

    ``choices`` holds (oneof key, child index) pairs in preorder; two
    realizations with equal add/del sets but different choices stay distinct
    because each oneof has its own determiner.
    """

    adds: frozenset[str]
    dels: frozenset[str]
    choices: tuple[tuple[str, int], ...]

    def choice_map(self) -> dict[str, int]:
        return dict(self.choices)

    def edge_key(self, tree: EffectNode) -> str:
        """Stable controller-edge key: oneof keys paired with outcome labels."""
        by_key = {key: node for key, node in _oneof_nodes(tree).items()}
        parts = []
        for key, index in self.choices:
            node = by_key[key]
            parts.append(f"{key}={outcome_label(node, index)}")
        return ";".join(parts)


def _oneof_nodes(tree: EffectNode) -> dict[str, EffectNode]:
    out: dict[str, EffectNode] = {}
    for node_id, node in iter_nodes(tree):
        if node.kind == ONEOF:
            key = oneof_key(node_id, node)
            if key in out:
                raise ModelError(f"duplicate oneof key {key!r} in effect tree")
            out[key] = node
    return out


def realization_count(tree: EffectNode) -> int:
    """leaf -> 1, and -> product of children, oneof -> sum of children."""
    if tree.kind == LEAF:
        return 1
    if tree.kind == AND:
        count = 1
        for child in tree.children:
            count *= realization_count(child)
        return count
    return sum(realization_count(child) for child in tree.children)


def enumerate_realizations(
    tree: EffectNode, action_name: str | None = None
) -> list[Realization]:
    """All distinct realizations of the tree, in deterministic order."""

    def walk(node: EffectNode, node_id: str) -> list[tuple[frozenset, frozenset, tuple]]:
        if node.kind == LEAF:
            lit = node.literal
            if lit.positive:
                return [(frozenset([lit.fluent]), frozenset(), ())]
            return [(frozenset(), frozenset([lit.fluent]), ())]
        if node.kind == AND:
            acc = [(frozenset(), frozenset(), ())]
            for i, child in enumerate(node.children):
                parts = walk(child, f"{node_id}.{i}")
                acc = [
                    (a | ca, d | cd, ch + cch)
                    for (a, d, ch) in acc
                    for (ca, cd, cch) in parts
                ]
            return acc
        key = oneof_key(node_id, node)
        out = []
        for i, child in enumerate(node.children):
            for a, d, ch in walk(child, f"{node_id}.{i}"):
                out.append((a, d, ((key, i),) + ch))
        return out

    realizations = []
    for adds, dels, choices in walk(tree, "e"):
        clash = adds & dels
        if clash:
            where = f" in action {action_name}" if action_name else ""
            raise ModelError(
                f"effect realization adds and deletes {sorted(clash)[0]!r}{where}"
            )
        realizations.append(Realization(adds, dels, choices))
    return realizations


def resolve(
    tree: EffectNode,
    choice: dict[str, int],
    action_name: str | None = None,
) -> Realization:
    """Resolve the tree under a choice map; choices for unreached oneofs are ignored."""
    adds: set[str] = set()
    dels: set[str] = set()
    used: list[tuple[str, int]] = []

    def walk(node: EffectNode, node_id: str) -> None:
        if node.kind == LEAF:
            lit = node.literal
            (adds if lit.positive else dels).add(lit.fluent)
            return
        if node.kind == AND:
            for i, child in enumerate(node.children):
                walk(child, f"{node_id}.{i}")
            return
        key = oneof_key(node_id, node)
        if key not in choice:
            raise ModelError(f"no choice given for reachable oneof {key!r}")
        index = choice[key]
        if not 0 <= index < len(node.children):
            raise ModelError(f"choice {index} out of range for oneof {key!r}")
        used.append((key, index))
        walk(node.children[index], f"{node_id}.{index}")

    walk(tree, "e")
    clash = frozenset(adds) & frozenset(dels)
    if clash:
        where = f" in action {action_name}" if action_name else ""
        raise ModelError(f"effect realization adds and deletes {sorted(clash)[0]!r}{where}")
    return Realization(frozenset(adds), frozenset(dels), tuple(used))


def apply_realization(state: frozenset[str], realization: Realization) -> frozenset[str]:
    """S' = (S \\ del) | add."""
    return (state - realization.dels) | realization.adds
