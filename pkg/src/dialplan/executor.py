"""Contingent-plan execution: state-context store, two-phase steps, and
recursive top-down outcome determination.

Every step (1) calls the action's execution callback once with the
precondition-filtered context, (2) determines the realization by walking
the effect tree top-down (oneof determiners run to completion before their
selected child; and-children may fan out to worker threads), (3) applies
the state/context updates and advances the controller node, and (4)
persists a trace record. Failures leave the snapshot untouched.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .compiler import ExecutionManifest
from .determiners import Scripted, registry_from_manifest, render_template
from .effects import Realization, apply_realization
from .errors import DeterminationError, ExecutionError, PlanDesyncError
from .pddl import AND, LEAF, ONEOF, ActionDef, DomainDef, EffectNode, ProblemDef
from .pddl import iter_nodes, oneof_key, outcome_label
from .planner import Controller

BOTTOM = None  # context value of an unbound or deleted fluent


def state_hash(state: frozenset[str]) -> str:
    return hashlib.sha256(",".join(sorted(state)).encode()).hexdigest()[:16]


@dataclass(frozen=True, slots=True)
class HistoryEntry:
    action: str
    edge: str
    utterances: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class Snapshot:
    """Aligned (state, context) pair plus the current controller node."""

    state: frozenset[str]
    context: dict
    node: int
    step: int
    history: tuple[HistoryEntry, ...] = ()

    def context_value(self, fluent: str):
        return self.context.get(fluent, BOTTOM)


@dataclass(frozen=True, slots=True)
class DeterminationResult:
    realization: Realization
    context_updates: dict
    raw: object


def check_alignment(
    snapshot: Snapshot, bindings: dict[str, str]
) -> None:
    """C(f) is set exactly for bound fluents that hold in the state."""
    expected = {f for f in snapshot.state if f in bindings}
    actual = {f for f, v in snapshot.context.items() if v is not BOTTOM}
    if expected != actual:
        raise ExecutionError(
            "state/context alignment broken: "
            f"context-only={sorted(actual - expected)}, state-only={sorted(expected - actual)}"
        )


def filter_context(action: ActionDef, context: dict) -> dict:
    """Context subset an action may see: its positive precondition fluents."""
    filtered = {}
    for fluent in sorted(action.positive_preconditions()):
        value = context.get(fluent, BOTTOM)
        if value is not BOTTOM:
            filtered[fluent] = json.loads(json.dumps(value))  # defensive copy
    return filtered


def context_by_variable(filtered: dict, bindings: dict[str, str]) -> dict:
    """Re-key a fluent-keyed context by variable name for determiner use."""
    return {bindings[f]: v for f, v in filtered.items() if f in bindings}


def determine(
    effect: EffectNode,
    registry: dict,
    payload,
    context: dict,
    parallel: bool = False,
) -> DeterminationResult:
    """Top-down nested determination.

    Leaves contribute their literal; a oneof runs its determiner to
    completion and recurses into the selected child only; the children of
    an and are evaluated independently (concurrently when ``parallel``)
    and merged in declaration order, so the result is schedule-independent.
    """
    adds, dels, choices, values = _determine_node(
        effect, "e", registry, payload, context, parallel
    )
    realization = Realization(frozenset(adds), frozenset(dels), tuple(choices))
    clash = realization.adds & realization.dels
    if clash:
        raise DeterminationError(f"realization adds and deletes {sorted(clash)[0]!r}")
    updates = {f: v for f, v in values.items() if f in realization.adds}
    updates.update({f: BOTTOM for f in realization.dels})
    return DeterminationResult(realization, updates, payload)


def _determine_node(
    node: EffectNode, node_id: str, registry: dict, payload, context, parallel: bool
):
    if node.kind == LEAF:
        lit = node.literal
        if lit.positive:
            return [lit.fluent], [], [], {}
        return [], [lit.fluent], [], {}
    if node.kind == AND:
        if parallel and len(node.children) > 1:
            # one worker pool per and-node: a shared bounded pool can
            # deadlock when nested and-branches exhaust it while blocked
            # on their own queued children
            with ThreadPoolExecutor(max_workers=len(node.children)) as pool:
                futures = [
                    pool.submit(
                        _determine_node, child, f"{node_id}.{i}",
                        registry, payload, context, parallel,
                    )
                    for i, child in enumerate(node.children)
                ]
                parts = [f.result() for f in futures]
        else:
            parts = [
                _determine_node(child, f"{node_id}.{i}", registry, payload, context, parallel)
                for i, child in enumerate(node.children)
            ]
        adds, dels, choices, values = [], [], [], {}
        for a, d, c, v in parts:  # merge in declaration order
            adds.extend(a)
            dels.extend(d)
            choices.extend(c)
            values.update(v)
        return adds, dels, choices, values
    key = oneof_key(node_id, node)
    determiner = registry.get(key)
    if determiner is None:
        raise DeterminationError(f"no determiner registered for oneof {key!r}")
    label, det_values = determiner(payload, context)
    index = None
    for i in range(len(node.children)):
        if outcome_label(node, i) == label:
            index = i
            break
    if index is None:
        raise DeterminationError(
            f"determiner for {key!r} selected unknown outcome {label!r}"
        )
    adds, dels, choices, values = _determine_node(
        node.children[index], f"{node_id}.{index}", registry, payload, context, parallel
    )
    merged = dict(det_values)
    merged.update(values)
    return adds, dels, [(key, index)] + choices, merged


@dataclass(slots=True)
class StepRecord:
    step: int
    node: int
    action: str
    prior_state_hash: str
    edge: str
    new_state: list
    context_delta: dict
    utterances: list
    next_node: int

    FIELD_ORDER = (
        "step", "node", "action", "prior_state_hash", "edge",
        "new_state", "context_delta", "utterances", "next_node",
    )

    def to_json_line(self) -> str:
        doc = {name: getattr(self, name) for name in self.FIELD_ORDER}
        return json.dumps(doc, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "StepRecord":
        doc = json.loads(line)
        return cls(**{name: doc[name] for name in cls.FIELD_ORDER})


class TraceLog:
    """Append-only line-delimited step log, optionally mirrored to a file."""

    def __init__(self, path=None):
        self.path = path
        self.records: list[StepRecord] = []
        if path is not None:
            open(path, "w", encoding="utf-8").close()

    def append(self, record: StepRecord) -> None:
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(record.to_json_line() + "\n")

    @staticmethod
    def load(path) -> list[StepRecord]:
        records = []
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                if line.strip():
                    records.append(StepRecord.from_json_line(line))
        return records


def initial_snapshot(problem: ProblemDef, controller: Controller, manifest: ExecutionManifest) -> Snapshot:
    context = {
        fluent: value
        for fluent, value in manifest.initial_context.items()
        if fluent in problem.init
    }
    return Snapshot(frozenset(problem.init), context, controller.n0, 0)


class ExecutionSession:
    """Single-writer execution of one conversation against a controller."""

    def __init__(
        self,
        domain: DomainDef,
        problem: ProblemDef,
        controller: Controller,
        manifest: ExecutionManifest,
        registry: dict | None = None,
        trace: TraceLog | None = None,
        web_responder=None,
        parallel: bool = False,
    ):
        self.domain = domain
        self.problem = problem
        self.controller = controller
        self.manifest = manifest
        self.registry = registry if registry is not None else registry_from_manifest(manifest.determiners)
        self.trace = trace if trace is not None else TraceLog()
        self.web_responder = web_responder
        self.parallel = parallel
        self._web_calls: dict[str, int] = {}
        self.snapshot = initial_snapshot(problem, controller, manifest)
        check_alignment(self.snapshot, manifest.variables)

    # ── introspection ──────────────────────────────────────────────

    @property
    def done(self) -> bool:
        return self.snapshot.node in self.controller.goal_nodes

    def current_action(self) -> ActionDef | None:
        if self.done:
            return None
        return self.domain.action(self.controller.actmap[self.snapshot.node])

    def current_binding(self) -> dict | None:
        action = self.current_action()
        if action is None:
            return None
        return self.manifest.actions[action.name]

    @property
    def awaiting_input(self) -> bool:
        binding = self.current_binding()
        return bool(binding and binding.get("awaits_input"))

    def prompt(self) -> str | None:
        """The utterance the agent sends before the next dialogue step."""
        action = self.current_action()
        binding = self.current_binding()
        if action is None or binding is None or binding["kind"] != "dialogue":
            return None
        variables = context_by_variable(
            filter_context(action, self.snapshot.context), self.manifest.variables
        )
        return render_template(binding.get("utterance", ""), variables)

    # ── stepping ───────────────────────────────────────────────────

    def _execute_callback(self, action: ActionDef, binding: dict, variables: dict, user_input):
        """Phase one: run the real-world callback exactly once."""
        kind = binding["kind"]
        if kind == "dialogue":
            utterance = render_template(binding.get("utterance", ""), variables)
            payload = "" if user_input is None else str(user_input)
            spoken = [f"agent: {utterance}"]
            if binding.get("awaits_input"):
                spoken.append(f"user: {payload}")
            return payload, spoken
        if kind == "web":
            if self.web_responder is not None:
                doc = self.web_responder(action.name, binding, variables)
            else:
                doc = self._simulated_response(action.name, binding)
            return doc, [f"web: {binding.get('endpoint', '')}"]
        return None, []

    def _simulated_response(self, name: str, binding: dict):
        sim = binding.get("simulate")
        if sim is None:
            raise ExecutionError(
                f"web action {name!r} has no simulated response and no responder was given"
            )
        if isinstance(sim, list):
            count = self._web_calls.get(name, 0)
            self._web_calls[name] = count + 1
            return sim[min(count, len(sim) - 1)]
        return sim

    def step(self, user_input: str | None = None) -> StepRecord:
        """Execute one action; on any failure the snapshot is unchanged."""
        before = self.snapshot
        if before.node in self.controller.goal_nodes:
            raise ExecutionError("conversation complete: the goal node has no action")
        action = self.current_action()
        binding = self.manifest.actions[action.name]
        if not action.applicable(before.state):
            raise ExecutionError(
                f"precondition of {action.name} does not hold at node {before.node}"
            )

        filtered = filter_context(action, before.context)
        variables = context_by_variable(filtered, self.manifest.variables)
        payload, utterances = self._execute_callback(action, binding, variables, user_input)
        result = determine(
            action.effect, self.registry, payload, variables, parallel=self.parallel
        )
        edge = result.realization.edge_key(action.effect)
        next_node = self.controller.edges.get((before.node, edge))
        if next_node is None:
            raise PlanDesyncError(
                f"determined realization {edge!r} of {action.name} has no controller edge"
            )

        new_state = apply_realization(before.state, result.realization)
        new_context = dict(before.context)
        delta: dict = {}
        for fluent in sorted(result.realization.dels):
            if fluent in new_context:
                del new_context[fluent]
                delta[fluent] = BOTTOM
        for fluent in sorted(result.realization.adds):
            if fluent not in self.manifest.variables:
                continue
            value = result.context_updates.get(fluent, BOTTOM)
            if value is BOTTOM:
                # determiner supplied no value; keep the old one or mark presence
                value = before.context.get(fluent, True)
            if new_context.get(fluent) != value:
                delta[fluent] = value
            new_context[fluent] = value

        after = Snapshot(
            state=new_state,
            context=new_context,
            node=next_node,
            step=before.step + 1,
            history=before.history
            + (HistoryEntry(action.name, edge, tuple(utterances)),),
        )
        check_alignment(after, self.manifest.variables)
        record = StepRecord(
            step=after.step,
            node=before.node,
            action=action.name,
            prior_state_hash=state_hash(before.state),
            edge=edge,
            new_state=sorted(new_state),
            context_delta=delta,
            utterances=list(utterances),
            next_node=next_node,
        )
        self.snapshot = after
        self.trace.append(record)
        return record

    def run_auto(self) -> list[StepRecord]:
        """Step through system/web/no-input-dialogue actions until input is
        needed or the goal is reached."""
        records = []
        while not self.done and not self.awaiting_input:
            records.append(self.step())
        return records


# ── trace replay ──────────────────────────────────────────────────────


@dataclass(slots=True)
class ReplayReport:
    consistent: bool
    divergences: list[str] = field(default_factory=list)
    snapshots: list[Snapshot] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.consistent


def _choices_from_edge(action: ActionDef, edge: str) -> dict[str, int]:
    """Invert an edge key back into a oneof choice map."""
    wanted: dict[str, str] = {}
    for part in edge.split(";") if edge else []:
        key, _, label = part.partition("=")
        wanted[key] = label
    choices: dict[str, int] = {}
    for node_id, node in iter_nodes(action.effect):
        if node.kind != ONEOF:
            continue
        key = oneof_key(node_id, node)
        if key not in wanted:
            continue
        for i in range(len(node.children)):
            if outcome_label(node, i) == wanted[key]:
                choices[key] = i
                break
        else:
            raise ExecutionError(f"edge {edge!r} names unknown outcome for {key!r}")
    if set(choices) != set(wanted):
        raise ExecutionError(f"edge {edge!r} does not fit the effect of {action.name}")
    return choices


def replay(
    domain: DomainDef,
    problem: ProblemDef,
    controller: Controller,
    manifest: ExecutionManifest,
    records: list[StepRecord],
) -> ReplayReport:
    """Re-execute a trace log against the controller and report divergences."""
    from .effects import resolve  # local import to keep the module graph flat

    divergences: list[str] = []
    snapshot = initial_snapshot(problem, controller, manifest)
    snapshots = [snapshot]
    for record in records:
        prefix = f"step {record.step}"
        if snapshot.node in controller.goal_nodes:
            divergences.append(f"{prefix}: trace continues past a goal node")
            break
        if record.node != snapshot.node:
            divergences.append(
                f"{prefix}: trace is at node {record.node}, expected {snapshot.node}"
            )
            break
        expected_action = controller.actmap.get(snapshot.node)
        if record.action != expected_action:
            divergences.append(
                f"{prefix}: trace ran {record.action!r}, controller says {expected_action!r}"
            )
            break
        if record.prior_state_hash != state_hash(snapshot.state):
            divergences.append(f"{prefix}: prior state hash mismatch")
            break
        action = domain.action(record.action)
        try:
            realization = resolve(action.effect, _choices_from_edge(action, record.edge))
        except Exception as exc:
            divergences.append(f"{prefix}: {exc}")
            break
        next_node = controller.edges.get((snapshot.node, record.edge))
        if next_node is None:
            divergences.append(f"{prefix}: edge {record.edge!r} not in controller")
            break
        if next_node != record.next_node:
            divergences.append(
                f"{prefix}: edge {record.edge!r} goes to {next_node}, trace says {record.next_node}"
            )
            break
        new_state = apply_realization(snapshot.state, realization)
        if sorted(new_state) != record.new_state:
            divergences.append(f"{prefix}: state after step differs from the trace")
            break
        context = dict(snapshot.context)
        for fluent, value in record.context_delta.items():
            if value is BOTTOM:
                context.pop(fluent, None)
            else:
                context[fluent] = value
        snapshot = Snapshot(new_state, context, next_node, snapshot.step + 1)
        snapshots.append(snapshot)
    return ReplayReport(not divergences, divergences, snapshots)


def snapshot_at(
    domain: DomainDef,
    problem: ProblemDef,
    controller: Controller,
    manifest: ExecutionManifest,
    records: list[StepRecord],
    k: int,
) -> Snapshot:
    """Snapshot after replaying the length-k prefix of a trace."""
    if not 0 <= k <= len(records):
        raise ExecutionError(f"step {k} outside trace of length {len(records)}")
    report = replay(domain, problem, controller, manifest, records[:k])
    if not report.consistent:
        raise ExecutionError("; ".join(report.divergences))
    return report.snapshots[k]
