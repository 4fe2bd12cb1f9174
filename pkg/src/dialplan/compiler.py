"""Compile an agent specification into a planning problem plus an execution manifest.

The encoding follows the knowledge-fluent scheme: a knowledge variable ``v``
becomes ``have_v`` (and ``maybe-have_v`` when uncertainty is tracked for it),
flags compile to bare fluents, every goal outcome adds the auxiliary ``GOAL``
fluent, forced followups gate actions behind ``can-do_*`` fluents, and a
designated start action is gated through ``STARTED``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .agentspec import (
    ActionSpec,
    AgentSpec,
    Need,
    OutcomeSpec,
    tracked_uncertain,
    validate,
)
from .errors import ModelError, SpecError
from .pddl import (
    ONEOF,
    ActionDef,
    DomainDef,
    EffectNode,
    Literal,
    ProblemDef,
    and_,
    iter_nodes,
    leaf,
    oneof,
    oneof_key,
    with_label,
)

GOAL_FLUENT = "GOAL"
STARTED_FLUENT = "STARTED"

YES_WORDS = ("yes", "yeah", "yep", "correct", "right", "sure")
NO_WORDS = ("no", "nope", "wrong", "not really")


@dataclass(frozen=True, slots=True)
class ExecutionManifest:
    """Everything the executor needs beyond the planning abstraction."""

    agent: str
    prefix: str
    actions: dict  # mangled action name -> callback descriptor
    determiners: dict  # oneof label -> determiner config
    variables: dict  # fluent name -> variable name
    initial_context: dict  # fluent name -> initial value

    def to_json(self) -> str:
        doc = {
            "format": "dialplan-manifest/1",
            "agent": self.agent,
            "prefix": self.prefix,
            "actions": self.actions,
            "determiners": self.determiners,
            "variables": self.variables,
            "initial_context": self.initial_context,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ExecutionManifest":
        doc = json.loads(text)
        return cls(
            agent=doc["agent"],
            prefix=doc["prefix"],
            actions=doc["actions"],
            determiners=doc["determiners"],
            variables=doc["variables"],
            initial_context=doc["initial_context"],
        )


@dataclass(frozen=True, slots=True)
class CompiledAgent:
    spec: AgentSpec
    domain: DomainDef
    problem: ProblemDef
    manifest: ExecutionManifest


class _Encoder:
    """Per-spec naming and literal-encoding helpers."""

    def __init__(self, spec: AgentSpec):
        self.spec = spec
        self.tracked = {
            v.name: tracked_uncertain(spec, v) for v in spec.variables
        }
        self.kinds = {v.name: v.kind for v in spec.variables}

    def mangle(self, short_name: str) -> str:
        return f"{self.spec.prefix}-{short_name}"

    def can_do(self, short_name: str) -> str:
        return f"can-do_{self.mangle(short_name)}"

    def variable_fluents(self, name: str) -> list[str]:
        if self.kinds[name] == "flag":
            return [name]
        fluents = [f"have_{name}"]
        if self.tracked[name]:
            fluents.append(f"maybe-have_{name}")
        return fluents

    def need_literals(self, need: Need) -> list[Literal]:
        v = need.variable
        if need.requirement == "true":
            return [Literal(v)]
        if need.requirement == "false":
            return [Literal(v, False)]
        have, maybe = f"have_{v}", f"maybe-have_{v}"
        if need.requirement == "known":
            out = [Literal(have)]
            if self.tracked[v]:
                out.append(Literal(maybe, False))
            return out
        if need.requirement == "unknown":
            out = [Literal(have, False)]
            if self.tracked[v]:
                out.append(Literal(maybe, False))
            return out
        if not self.tracked[v]:
            raise SpecError(f"variable {v!r} has an uncertain need but no tracked uncertainty")
        return [Literal(maybe)]

    def update_literals(self, variable: str, state: str) -> list[Literal]:
        if state == "true":
            return [Literal(variable)]
        if state == "false":
            return [Literal(variable, False)]
        have, maybe = f"have_{variable}", f"maybe-have_{variable}"
        if state == "known":
            out = [Literal(have)]
            if self.tracked[variable]:
                out.append(Literal(maybe, False))
            return out
        if state == "unknown":
            out = [Literal(have, False)]
            if self.tracked[variable]:
                out.append(Literal(maybe, False))
            return out
        if not self.tracked[variable]:
            raise SpecError(
                f"variable {variable!r} is updated to uncertain but has no tracked uncertainty"
            )
        return [Literal(maybe), Literal(have, False)]


def _generated_actions(spec: AgentSpec, enc: _Encoder) -> list[ActionSpec]:
    """Slot-fill, confirm, and contextual-extraction actions."""
    out: list[ActionSpec] = []
    for slot in spec.slot_fills:
        out.append(
            ActionSpec(
                name=f"slotfill-{slot.variable}",
                kind="dialogue",
                utterance=slot.utterance,
                needs=(Need(slot.variable, "unknown"),),
                outcomes=(
                    OutcomeSpec(
                        name="filled",
                        updates=((slot.variable, "known"),),
                        keywords=(f"${slot.variable}",),
                    ),
                    OutcomeSpec(
                        name=None,
                        fallback=True,
                        updates=((slot.variable, "unknown"),),
                    ),
                ),
            )
        )
    for confirm in spec.confirms:
        out.append(
            ActionSpec(
                name=f"confirm-{confirm.variable}",
                kind="dialogue",
                utterance=confirm.utterance,
                needs=(Need(confirm.variable, "uncertain"),),
                outcomes=(
                    OutcomeSpec(
                        name="confirmed",
                        updates=((confirm.variable, "known"),),
                        keywords=YES_WORDS,
                        values=((confirm.variable, f"${confirm.variable}"),),
                    ),
                    OutcomeSpec(
                        name="denied",
                        updates=((confirm.variable, "unknown"),),
                        keywords=NO_WORDS,
                    ),
                ),
            )
        )
    # cee groups compile through a dedicated effect shape; represented here
    # as plain actions and special-cased in _compile_action
    for group in spec.cee_groups:
        out.append(
            ActionSpec(
                name=group.name,
                kind="dialogue",
                utterance=group.utterance,
                needs=tuple(Need(v, "unknown") for v in group.variables),
            )
        )
    return out


def _with_fallback(action: ActionSpec) -> tuple[OutcomeSpec, ...]:
    """Dialogue actions always end up with exactly one fallback outcome."""
    outcomes = action.outcomes
    if action.kind != "dialogue":
        return outcomes
    if any(o.fallback for o in outcomes):
        return outcomes
    return outcomes + (OutcomeSpec(name=None, fallback=True),)


def _expand_max_applications(
    actions: list[ActionSpec], enc: _Encoder
) -> tuple[list[tuple[ActionSpec, str, list[Literal], str | None]], list[str]]:
    """Unfold bounded-retry guards.

    Returns (action, original short name, extra precondition literals,
    consumed guard) rows plus all guard fluents. A bound of k yields k
    copies, each requiring and deleting its own guard fluent, consumed in
    order; a single-action unary counter is not expressible without
    conditional effects, which the dialect excludes.
    """
    rows: list[tuple[ActionSpec, str, list[Literal], str | None]] = []
    guards: list[str] = []
    for action in actions:
        k = action.max_applications
        if k is None:
            rows.append((action, action.name, [], None))
            continue
        action_guards = [f"guard_{enc.mangle(action.name)}_{i}" for i in range(1, k + 1)]
        guards.extend(action_guards)
        for i in range(1, k + 1):
            extra = [Literal(action_guards[i - 1])]
            if i > 1:
                extra.append(Literal(action_guards[i - 2], False))
            name = action.name if k == 1 else f"{action.name}_use{i}"
            copy = ActionSpec(
                name=name,
                kind=action.kind,
                utterance=action.utterance,
                endpoint=action.endpoint,
                response_field=action.response_field,
                simulate=action.simulate,
                needs=action.needs,
                outcomes=action.outcomes,
                max_applications=None,
                is_start=action.is_start and i == 1,
            )
            rows.append((copy, action.name, extra, action_guards[i - 1]))
    return rows, guards


def compile_spec(spec: AgentSpec) -> CompiledAgent:
    """Compile a validated spec to (domain, problem, manifest)."""
    diagnostics = [d for d in validate(spec) if d.severity == "error"]
    if diagnostics:
        raise SpecError(
            "specification does not validate: " + "; ".join(str(d) for d in diagnostics)
        )
    enc = _Encoder(spec)
    generated = _generated_actions(spec, enc)
    all_actions = list(spec.actions) + generated

    short_names = [a.name for a in all_actions]
    if len(set(short_names)) != len(short_names):
        dupe = sorted({n for n in short_names if short_names.count(n) > 1})[0]
        raise SpecError(f"generated action name collides with a declared one: {dupe!r}")

    followups_exist = any(o.followup for a in all_actions for o in a.outcomes)
    opener = next((a for a in all_actions if a.is_start), None)

    rows, guard_fluents = _expand_max_applications(all_actions, enc)

    # predicate declarations, in a stable human-oriented order
    predicates: list[str] = []
    for variable in spec.variables:
        predicates.extend(enc.variable_fluents(variable.name))
    predicates.append(GOAL_FLUENT)
    if opener is not None:
        predicates.append(STARTED_FLUENT)
    if followups_exist:
        predicates.extend(enc.can_do(a.name) for a in all_actions)
    predicates.extend(guard_fluents)
    mangled = [enc.mangle(a.name) for a, _orig, _extra, _guard in rows]
    collisions = set(predicates) & set(mangled)
    if len(set(predicates)) != len(predicates) or len(set(mangled)) != len(mangled) or collisions:
        raise SpecError("name collision after mangling")

    cee_names = {g.name: g for g in spec.cee_groups}
    actions: list[ActionDef] = []
    determiners: dict[str, dict] = {}
    manifest_actions: dict[str, dict] = {}
    for action, original, extra_pre, consumed_guard in rows:
        adef, dets = _compile_action(
            action, original, extra_pre, consumed_guard, spec, enc,
            followups_exist, opener, all_actions, cee_names.get(original),
        )
        actions.append(adef)
        for label, cfg in dets.items():
            if label in determiners:
                raise SpecError(f"name collision after mangling: oneof {label!r}")
            determiners[label] = cfg
        binding = _action_binding(action, original, enc)
        if original in cee_names:
            binding["awaits_input"] = True
        manifest_actions[adef.name] = binding

    domain = DomainDef(spec.name, tuple(predicates), tuple(actions))

    init: list[str] = []
    for variable in spec.variables:
        if variable.kind == "flag":
            if variable.value:
                init.append(variable.name)
        elif variable.knowledge == "known":
            init.append(f"have_{variable.name}")
        elif variable.knowledge == "uncertain":
            init.append(f"maybe-have_{variable.name}")
    if followups_exist:
        init.extend(enc.can_do(a.name) for a in all_actions)
    init.extend(guard_fluents)
    problem = ProblemDef(f"{spec.name}_problem", spec.name, tuple(init), (GOAL_FLUENT,))

    variable_bindings: dict[str, str] = {}
    for variable in spec.variables:
        if variable.kind != "flag":
            variable_bindings[f"have_{variable.name}"] = variable.name
            if enc.tracked[variable.name]:
                variable_bindings[f"maybe-have_{variable.name}"] = variable.name
    initial_context: dict[str, object] = {}
    for variable in spec.variables:
        if variable.kind == "flag":
            continue
        if variable.knowledge == "known":
            initial_context[f"have_{variable.name}"] = variable.value
        elif variable.knowledge == "uncertain":
            initial_context[f"maybe-have_{variable.name}"] = variable.value

    manifest = ExecutionManifest(
        agent=spec.name,
        prefix=spec.prefix,
        actions=manifest_actions,
        determiners=determiners,
        variables=variable_bindings,
        initial_context=initial_context,
    )
    _check_manifest_closure(domain, manifest)
    return CompiledAgent(spec, domain, problem, manifest)


def _action_binding(action: ActionSpec, original: str, enc: _Encoder) -> dict:
    awaits = action.kind == "dialogue" and any(o.keywords for o in action.outcomes)
    binding: dict = {"kind": action.kind, "short_name": original, "awaits_input": awaits}
    if action.utterance is not None:
        binding["utterance"] = action.utterance
    if action.endpoint is not None:
        binding["endpoint"] = action.endpoint
    if action.response_field is not None:
        binding["response_field"] = action.response_field
    if action.simulate is not None:
        binding["simulate"] = action.simulate
    return binding


def _outcome_effect(
    action: ActionSpec,
    outcome: OutcomeSpec,
    spec: AgentSpec,
    enc: _Encoder,
    followups_exist: bool,
    opener: ActionSpec | None,
    all_actions: list[ActionSpec],
) -> EffectNode:
    literals: list[Literal] = []
    if outcome.check:
        literals.extend(enc.update_literals(outcome.check[0], "known"))
    for variable, state in outcome.updates:
        literals.extend(enc.update_literals(variable, state))
    if outcome.is_goal:
        literals.append(Literal(GOAL_FLUENT))
    if opener is not None and action.is_start:
        literals.append(Literal(STARTED_FLUENT))
    if followups_exist:
        if outcome.followup:
            for other in all_actions:
                enabled = other.name == outcome.followup
                literals.append(Literal(enc.can_do(other.name), enabled))
        else:
            literals.extend(Literal(enc.can_do(other.name)) for other in all_actions)
    label = outcome.label_for(action.name)
    nodes = [leaf(l.fluent, l.positive) for l in literals]
    if len(nodes) == 1:
        return with_label(nodes[0], label)
    return with_label(and_(nodes), label)


def _compile_action(
    action: ActionSpec,
    original: str,
    extra_pre: list[Literal],
    consumed_guard: str | None,
    spec: AgentSpec,
    enc: _Encoder,
    followups_exist: bool,
    opener: ActionSpec | None,
    all_actions: list[ActionSpec],
    cee_group,
) -> tuple[ActionDef, dict[str, dict]]:
    precondition: list[Literal] = []
    if followups_exist:
        precondition.append(Literal(enc.can_do(original)))
    for need in action.needs:
        for lit in enc.need_literals(need):
            if lit not in precondition:
                precondition.append(lit)
    if opener is not None and not action.is_start:
        precondition.append(Literal(STARTED_FLUENT))
    precondition.extend(extra_pre)

    determiners: dict[str, dict] = {}
    if cee_group is not None:
        effect, determiners = _compile_cee_effect(
            action, cee_group, enc, followups_exist, opener, all_actions
        )
    else:
        outcomes = _with_fallback(action)
        children = [
            _outcome_effect(action, o, spec, enc, followups_exist, opener, all_actions)
            for o in outcomes
        ]
        resolve_name = f"resolve-{action.name}"
        effect = oneof(children, name=resolve_name)
        determiners[resolve_name] = _action_determiner(action, outcomes, enc)
    if consumed_guard is not None:
        effect = and_([effect, leaf(consumed_guard, positive=False)])

    return ActionDef(enc.mangle(action.name), tuple(precondition), effect), determiners


def _value_targets(outcome: OutcomeSpec, enc: _Encoder) -> dict[str, str]:
    """Per-outcome value templates, keyed by the fluent that receives them."""
    values: dict[str, str] = {}
    if outcome.check:
        variable, expected = outcome.check
        values[f"have_{variable}"] = expected
    for variable, template in outcome.values:
        state = dict(outcome.updates).get(variable, "known")
        fluent = f"maybe-have_{variable}" if state == "uncertain" else f"have_{variable}"
        values[fluent] = template
    return values


def _action_determiner(
    action: ActionSpec, outcomes: tuple[OutcomeSpec, ...], enc: _Encoder
) -> dict:
    if action.kind == "dialogue":
        fallback_label = next(
            o.label_for(action.name) for o in outcomes if o.fallback
        )
        entries = [
            {
                "label": o.label_for(action.name),
                "keywords": list(o.keywords),
                "values": _value_targets(o, enc),
            }
            for o in outcomes
        ]
        return {"kind": "keyword-intent", "fallback": fallback_label, "outcomes": entries}
    if action.kind == "system":
        conditions = []
        for o in outcomes:
            conditions.append(
                {
                    "when": None if o.when in (None, "otherwise") else o.when,
                    "label": o.label_for(action.name),
                    "values": _value_targets(o, enc),
                }
            )
        return {"kind": "ordered-condition", "conditions": conditions}
    mapping = {}
    values = {}
    for o in outcomes:
        mapping[o.response] = o.label_for(action.name)
        entry_values = _value_targets(o, enc)
        if entry_values:
            values[o.label_for(action.name)] = entry_values
    return {
        "kind": "response-map",
        "field": action.response_field,
        "map": mapping,
        "values": values,
    }


def _compile_cee_effect(
    action: ActionSpec,
    group,
    enc: _Encoder,
    followups_exist: bool,
    opener: ActionSpec | None,
    all_actions: list[ActionSpec],
) -> tuple[EffectNode, dict[str, dict]]:
    """Contextual extraction: an independent got-it/missed-it oneof per variable."""
    determiners: dict[str, dict] = {}
    parts: list[EffectNode] = []
    for variable in group.variables:
        got_label = f"{action.name}_{variable}-extracted__"
        missing_label = f"{action.name}_{variable}-missing__"
        got_literals = enc.update_literals(variable, "known")
        missing_literals = enc.update_literals(variable, "unknown")

        def as_node(literals: list[Literal], label: str) -> EffectNode:
            nodes = [leaf(l.fluent, l.positive) for l in literals]
            node = nodes[0] if len(nodes) == 1 else and_(nodes)
            return with_label(node, label)

        resolve_name = f"resolve-{action.name}-{variable}"
        parts.append(
            oneof(
                [as_node(got_literals, got_label), as_node(missing_literals, missing_label)],
                name=resolve_name,
            )
        )
        patterns = [e for e in group.examples if f"${variable}" in e] or [f"${variable}"]
        determiners[resolve_name] = {
            "kind": "keyword-intent",
            "fallback": missing_label,
            "outcomes": [
                {"label": got_label, "keywords": patterns, "values": {}}
            ],
        }
    tail: list[EffectNode] = []
    if followups_exist:
        tail = [leaf(enc.can_do(other.name)) for other in all_actions]
    if opener is not None and action.is_start:
        tail.insert(0, leaf(STARTED_FLUENT))
    return and_(parts + tail), determiners


def _check_manifest_closure(domain: DomainDef, manifest: ExecutionManifest) -> None:
    emitted: set[str] = set()
    for action in domain.actions:
        for node_id, node in iter_nodes(action.effect):
            if node.kind == ONEOF:
                emitted.add(oneof_key(node_id, node))
    bound = set(manifest.determiners)
    if emitted != bound:
        missing = sorted(emitted - bound) + sorted(bound - emitted)
        raise ModelError(f"determiner bindings out of sync with emitted oneofs: {missing}")
