"""Strong-cyclic controller synthesis for propositional FOND problems.

The solver works over explicit states: forward-reach the state space, then
iteratively prune state/action pairs that either can leak outside the
covered set or cannot reach the goal, until stable. Under fairness the
surviving policy is strong cyclic; the controller keeps one node per
policy-reachable state. An independent validator re-checks any controller
by explicit graph traversal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .effects import Realization, apply_realization, enumerate_realizations
from .errors import DialplanError
from .pddl import ActionDef, DomainDef, ProblemDef

DEFAULT_STATE_CAP = 200_000


class ResourceLimitError(DialplanError):
    """State cap exceeded while exploring the reachable space."""


@dataclass(frozen=True, slots=True)
class Controller:
    """Contingent plan: nodes map to actions, realization edge keys to successors."""

    n0: int
    actmap: dict[int, str]
    edges: dict[tuple[int, str], int]
    goal_nodes: frozenset[int]
    states: dict[int, frozenset[str]]

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset(self.states)

    def successors(self, node: int) -> dict[str, int]:
        return {key: to for (frm, key), to in self.edges.items() if frm == node}

    def to_json(self, agent: str | None = None) -> str:
        doc = {
            "format": "dialplan-controller/1",
            "agent": agent,
            "n0": self.n0,
            "goal_nodes": sorted(self.goal_nodes),
            "nodes": [
                {
                    "id": node,
                    "action": self.actmap.get(node),
                    "state": sorted(self.states[node]),
                }
                for node in sorted(self.states)
            ],
            "edges": [
                {"from": frm, "key": key, "to": to}
                for (frm, key), to in sorted(self.edges.items())
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Controller":
        doc = json.loads(text)
        return cls(
            n0=doc["n0"],
            actmap={
                n["id"]: n["action"] for n in doc["nodes"] if n["action"] is not None
            },
            edges={(e["from"], e["key"]): e["to"] for e in doc["edges"]},
            goal_nodes=frozenset(doc["goal_nodes"]),
            states={n["id"]: frozenset(n["state"]) for n in doc["nodes"]},
        )


@dataclass(frozen=True, slots=True)
class ActionTable:
    """Per-action realization cache with stable edge keys."""

    action: ActionDef
    realizations: tuple[Realization, ...]
    edge_keys: tuple[str, ...]


def build_action_tables(domain: DomainDef) -> list[ActionTable]:
    tables = []
    for action in domain.actions:
        realizations = tuple(enumerate_realizations(action.effect, action.name))
        keys = tuple(r.edge_key(action.effect) for r in realizations)
        tables.append(ActionTable(action, realizations, keys))
    return tables


def _forward_states(
    tables: list[ActionTable], init: frozenset[str], max_states: int
) -> set[frozenset[str]]:
    seen = {init}
    frontier = [init]
    while frontier:
        state = frontier.pop()
        for table in tables:
            if not table.action.applicable(state):
                continue
            for realization in table.realizations:
                succ = apply_realization(state, realization)
                if succ not in seen:
                    if len(seen) >= max_states:
                        raise ResourceLimitError(
                            f"state cap of {max_states} states exceeded"
                        )
                    seen.add(succ)
                    frontier.append(succ)
    return seen


def solve(
    domain: DomainDef, problem: ProblemDef, max_states: int = DEFAULT_STATE_CAP
) -> Controller | None:
    """Synthesize a strong-cyclic controller, or return None when unsolvable."""
    tables = build_action_tables(domain)
    init = frozenset(problem.init)
    goal = frozenset(problem.goal)
    states = _forward_states(tables, init, max_states)
    goal_states = {s for s in states if goal <= s}

    # candidate policy: every applicable action at every non-goal state
    successors: dict[tuple[frozenset, int], list[frozenset]] = {}
    allowed: dict[frozenset, list[int]] = {}
    for state in states:
        if state in goal_states:
            continue
        acts = []
        for idx, table in enumerate(tables):
            if table.action.applicable(state):
                acts.append(idx)
                successors[(state, idx)] = [
                    apply_realization(state, r) for r in table.realizations
                ]
        allowed[state] = acts

    order = sorted(allowed, key=sorted)  # deterministic iteration
    while True:
        changed = False
        # outgoing safety: every outcome must stay inside covered ∪ goal
        covered = {s for s, acts in allowed.items() if acts} | goal_states
        for state in order:
            kept = [
                idx
                for idx in allowed[state]
                if all(succ in covered for succ in successors[(state, idx)])
            ]
            if len(kept) != len(allowed[state]):
                allowed[state] = kept
                changed = True
        # goal connectivity: some allowed path must reach the goal
        reach = set(goal_states)
        grew = True
        while grew:
            grew = False
            for state in order:
                if state in reach:
                    continue
                for idx in allowed[state]:
                    if any(succ in reach for succ in successors[(state, idx)]):
                        reach.add(state)
                        grew = True
                        break
        for state in order:
            if state not in reach and allowed[state]:
                allowed[state] = []
                changed = True
        if not changed:
            break

    if init not in goal_states and not allowed.get(init):
        return None

    # Extraction: layer states by optimistic distance to goal over surviving
    # pairs and pick an action with some next-layer-down successor (ties
    # break on action name). Picking an arbitrary surviving pair instead
    # could loop a deterministic controller away from the goal forever.
    rank: dict[frozenset, int] = {s: 0 for s in goal_states}
    policy: dict[frozenset, int] = {}
    unranked = [s for s in order if allowed[s]]
    layer = 0
    while unranked:
        layer += 1
        newly: list[frozenset] = []
        for state in unranked:
            candidates = [
                idx
                for idx in allowed[state]
                if any(
                    rank.get(succ, layer) < layer
                    for succ in successors[(state, idx)]
                )
            ]
            if candidates:
                policy[state] = min(candidates, key=lambda i: tables[i].action.name)
                newly.append(state)
        if not newly:
            break
        for state in newly:
            rank[state] = layer
        unranked = [s for s in unranked if s not in rank]

    ids: dict[frozenset, int] = {init: 0}
    actmap: dict[int, str] = {}
    edges: dict[tuple[int, str], int] = {}
    goal_nodes: set[int] = set()
    queue = [init]
    while queue:
        state = queue.pop(0)
        node = ids[state]
        if state in goal_states:
            goal_nodes.add(node)
            continue
        idx = policy[state]
        table = tables[idx]
        actmap[node] = table.action.name
        for realization, key in zip(table.realizations, table.edge_keys):
            succ = apply_realization(state, realization)
            if succ not in ids:
                ids[succ] = len(ids)
                queue.append(succ)
            edges[(node, key)] = ids[succ]
    states_by_id = {node: state for state, node in ids.items()}
    return Controller(
        n0=0,
        actmap=actmap,
        edges=edges,
        goal_nodes=frozenset(goal_nodes),
        states=states_by_id,
    )


@dataclass(slots=True)
class Verdict:
    valid: bool
    failures: list[str] = field(default_factory=list)
    visited: int = 0

    def __bool__(self) -> bool:
        return self.valid


def validate_plan(
    domain: DomainDef, problem: ProblemDef, controller: Controller
) -> Verdict:
    """Independent plan check by explicit traversal of (state, node) pairs.

    Verifies preconditions at every visited pair, edge closure over all
    realizations, and that every reachable pair can still reach a goal.
    """
    failures: list[str] = []
    tables = {t.action.name: t for t in build_action_tables(domain)}
    goal = frozenset(problem.goal)
    if controller.n0 not in controller.states:
        return Verdict(False, ["initial node is not a controller node"], 0)
    for (frm, key), to in controller.edges.items():
        if frm not in controller.states or to not in controller.states:
            failures.append(f"edge ({frm}, {key!r}) touches an unknown node")
    if failures:
        return Verdict(False, failures, 0)

    start = (frozenset(problem.init), controller.n0)
    seen = {start}
    queue = [start]
    transitions: dict[tuple, list[tuple]] = {}
    goal_pairs = set()
    while queue:
        pair = queue.pop(0)
        state, node = pair
        if node in controller.goal_nodes:
            if not goal <= state:
                failures.append(
                    f"goal node {node} reached with unsatisfied goal in state {sorted(state)}"
                )
            goal_pairs.add(pair)
            continue
        name = controller.actmap.get(node)
        if name is None:
            failures.append(f"non-goal node {node} has no action")
            continue
        if name not in tables:
            failures.append(f"node {node} maps to unknown action {name!r}")
            continue
        table = tables[name]
        if not table.action.applicable(state):
            failures.append(
                f"precondition of {name} does not hold at node {node} "
                f"in state {sorted(state)}"
            )
            continue
        outs = []
        for realization, key in zip(table.realizations, table.edge_keys):
            succ_node = controller.edges.get((node, key))
            if succ_node is None:
                failures.append(f"node {node} has no edge for realization {key!r}")
                continue
            succ = (apply_realization(state, realization), succ_node)
            outs.append(succ)
            if succ not in seen:
                seen.add(succ)
                queue.append(succ)
        transitions[pair] = outs

    # fair reachability: every visited pair must reach some goal pair
    can_reach = set(goal_pairs)
    grew = True
    while grew:
        grew = False
        for pair, outs in transitions.items():
            if pair not in can_reach and any(o in can_reach for o in outs):
                can_reach.add(pair)
                grew = True
    for pair in seen:
        if pair not in can_reach:
            state, node = pair
            failures.append(
                f"no fair path to goal from node {node} in state {sorted(state)}"
            )
            break
    return Verdict(not failures, failures, len(seen))
