"""Declarative dialogue-agent specifications.

One YAML document per agent: typed variables, dialogue/web/system actions
with needs/outcomes/updates, plus the slot-fill / confirm / contextual
extraction enhancements. The grammar is documented in docs/agent-format.md.
"""

from __future__ import annotations

from dataclasses import dataclass

import yaml

from .errors import SpecError

KNOWLEDGE_STATES = ("unknown", "known", "uncertain")
VARIABLE_KINDS = ("flag", "entity", "json")
ACTION_KINDS = ("dialogue", "web", "system")


@dataclass(frozen=True, slots=True)
class VariableDecl:
    name: str
    kind: str = "entity"
    knowledge: str = "unknown"
    value: object = None


@dataclass(frozen=True, slots=True)
class Need:
    variable: str
    requirement: str  # known | unknown | uncertain for knowledge vars, true | false for flags


@dataclass(frozen=True, slots=True)
class OutcomeSpec:
    """One possible event of an action.

    An outcome without a name is the action's fallback and labels as
    ``<action>-outcome-fallback__``; named outcomes label as
    ``<action>_<name>__`` plus a ``check-<var>-eq-<value>`` suffix when a
    check is declared.
    """

    name: str | None = None
    updates: tuple[tuple[str, str], ...] = ()
    is_goal: bool = False
    followup: str | None = None
    fallback: bool = False
    check: tuple[str, str] | None = None
    keywords: tuple[str, ...] = ()
    when: str | None = None
    response: str | None = None
    values: tuple[tuple[str, str], ...] = ()

    def label_for(self, action_name: str) -> str:
        if self.name is None:
            return f"{action_name}-outcome-fallback__"
        suffix = f"check-{self.check[0]}-eq-{self.check[1]}" if self.check else ""
        return f"{action_name}_{self.name}__{suffix}"


@dataclass(frozen=True, slots=True)
class ActionSpec:
    name: str
    kind: str
    utterance: str | None = None
    endpoint: str | None = None
    response_field: str | None = None
    simulate: object = None
    needs: tuple[Need, ...] = ()
    outcomes: tuple[OutcomeSpec, ...] = ()
    max_applications: int | None = None
    is_start: bool = False


@dataclass(frozen=True, slots=True)
class SlotFill:
    variable: str
    utterance: str


@dataclass(frozen=True, slots=True)
class Confirm:
    variable: str
    utterance: str


@dataclass(frozen=True, slots=True)
class CeeGroup:
    name: str
    utterance: str
    variables: tuple[str, ...]
    examples: tuple[str, ...]


@dataclass(frozen=True, slots=True)
class AgentSpec:
    name: str
    prefix: str
    three_valued: bool = False
    variables: tuple[VariableDecl, ...] = ()
    actions: tuple[ActionSpec, ...] = ()
    slot_fills: tuple[SlotFill, ...] = ()
    confirms: tuple[Confirm, ...] = ()
    cee_groups: tuple[CeeGroup, ...] = ()

    def variable(self, name: str) -> VariableDecl:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)


@dataclass(frozen=True, slots=True)
class Diagnostic:
    severity: str  # error | warning
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.severity}: {self.location}: {self.message}"


# ── loading ───────────────────────────────────────────────────────────


def _require_map(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: expected a mapping, got {type(obj).__name__}")
    return obj


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SpecError(f"{where}: unknown key {sorted(unknown)[0]!r}")


def _load_variable(obj, where: str) -> VariableDecl:
    obj = _require_map(obj, where)
    _check_keys(obj, {"name", "kind", "knowledge", "value"}, where)
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise SpecError(f"{where}: variable needs a name")
    kind = obj.get("kind", "entity")
    if kind not in VARIABLE_KINDS:
        raise SpecError(f"{where}: unknown variable kind {kind!r}")
    if kind == "flag":
        value = obj.get("value", False)
        if not isinstance(value, bool):
            raise SpecError(f"{where}: flag value must be true or false")
        return VariableDecl(name, "flag", "known", value)
    knowledge = obj.get("knowledge", "unknown")
    if knowledge not in KNOWLEDGE_STATES:
        raise SpecError(f"{where}: unknown knowledge state {knowledge!r}")
    value = obj.get("value")
    if knowledge in ("known", "uncertain") and value is None:
        raise SpecError(f"{where}: initial knowledge {knowledge!r} requires a value")
    if knowledge == "unknown" and value is not None:
        raise SpecError(f"{where}: an unknown variable cannot carry an initial value")
    return VariableDecl(name, kind, knowledge, value)


def _load_need(obj, where: str) -> Need:
    obj = _require_map(obj, where)
    _check_keys(obj, {"variable", "is"}, where)
    variable = obj.get("variable")
    requirement = obj.get("is")
    if not isinstance(variable, str):
        raise SpecError(f"{where}: need requires a variable")
    if isinstance(requirement, bool):
        requirement = "true" if requirement else "false"
    if requirement not in ("known", "unknown", "uncertain", "true", "false"):
        raise SpecError(f"{where}: need requirement must be a knowledge state or flag value")
    return Need(variable, requirement)


def _load_pairs(obj, where: str, valid: tuple[str, ...] | None) -> tuple[tuple[str, str], ...]:
    obj = _require_map(obj, where)
    out = []
    for key, val in obj.items():
        if isinstance(val, bool):
            val = "true" if val else "false"
        if valid is not None and val not in valid:
            raise SpecError(f"{where}: invalid value {val!r} for {key!r}")
        out.append((str(key), str(val)))
    return tuple(out)


def _load_outcome(obj, where: str) -> OutcomeSpec:
    obj = _require_map(obj, where)
    allowed = {
        "name", "updates", "goal", "followup", "fallback", "check",
        "keywords", "when", "response", "values",
    }
    _check_keys(obj, allowed, where)
    name = obj.get("name")
    if name is not None and not isinstance(name, str):
        raise SpecError(f"{where}: outcome name must be a string")
    fallback = bool(obj.get("fallback", False))
    if name is None:
        fallback = True
    check = None
    if "check" in obj:
        cmap = _require_map(obj["check"], f"{where}.check")
        _check_keys(cmap, {"variable", "equals"}, f"{where}.check")
        if "variable" not in cmap or "equals" not in cmap:
            raise SpecError(f"{where}.check: needs variable and equals")
        check = (str(cmap["variable"]), str(cmap["equals"]))
    updates = _load_pairs(
        obj.get("updates", {}), f"{where}.updates",
        ("known", "unknown", "uncertain", "true", "false"),
    )
    values = _load_pairs(obj.get("values", {}), f"{where}.values", None)
    keywords = obj.get("keywords", [])
    if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
        raise SpecError(f"{where}: keywords must be a list of phrases")
    return OutcomeSpec(
        name=name,
        updates=updates,
        is_goal=bool(obj.get("goal", False)),
        followup=obj.get("followup"),
        fallback=fallback,
        check=check,
        keywords=tuple(keywords),
        when=obj.get("when"),
        response=None if obj.get("response") is None else str(obj.get("response")),
        values=values,
    )


def _load_action(obj, where: str) -> ActionSpec:
    obj = _require_map(obj, where)
    allowed = {
        "name", "type", "utterance", "endpoint", "response_field", "simulate",
        "needs", "outcomes", "max_applications", "start",
    }
    _check_keys(obj, allowed, where)
    name = obj.get("name")
    if not isinstance(name, str) or not name:
        raise SpecError(f"{where}: action needs a name")
    kind = obj.get("type", "dialogue")
    if kind not in ACTION_KINDS:
        raise SpecError(f"{where}: unknown action type {kind!r}")
    needs = tuple(
        _load_need(n, f"{where}.needs[{i}]") for i, n in enumerate(obj.get("needs", []))
    )
    outcomes = tuple(
        _load_outcome(o, f"{where}.outcomes[{i}]")
        for i, o in enumerate(obj.get("outcomes", []))
    )
    max_applications = obj.get("max_applications")
    if max_applications is not None and (
        not isinstance(max_applications, int) or max_applications < 1
    ):
        raise SpecError(f"{where}: max_applications must be a positive integer")
    return ActionSpec(
        name=name,
        kind=kind,
        utterance=obj.get("utterance"),
        endpoint=obj.get("endpoint"),
        response_field=obj.get("response_field"),
        simulate=obj.get("simulate"),
        needs=needs,
        outcomes=outcomes,
        max_applications=max_applications,
        is_start=bool(obj.get("start", False)),
    )


def load_spec(text: str) -> AgentSpec:
    """Parse an agent document. Fails fast on malformed structure; semantic
    problems are reported by :func:`validate` instead."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SpecError(f"not a well-formed document: {exc}") from exc
    doc = _require_map(doc, "document")
    allowed = {
        "agent", "prefix", "three_valued", "variables", "actions",
        "slotfills", "confirms", "cee",
    }
    _check_keys(doc, allowed, "document")
    name = doc.get("agent")
    if not isinstance(name, str) or not name:
        raise SpecError("document: missing agent name")
    prefix = doc.get("prefix", name)
    variables = tuple(
        _load_variable(v, f"variables[{i}]") for i, v in enumerate(doc.get("variables", []))
    )
    actions = tuple(
        _load_action(a, f"actions[{i}]") for i, a in enumerate(doc.get("actions", []))
    )
    slot_fills = []
    for i, s in enumerate(doc.get("slotfills", [])):
        s = _require_map(s, f"slotfills[{i}]")
        _check_keys(s, {"variable", "utterance"}, f"slotfills[{i}]")
        slot_fills.append(SlotFill(str(s.get("variable")), str(s.get("utterance", ""))))
    confirms = []
    for i, c in enumerate(doc.get("confirms", [])):
        c = _require_map(c, f"confirms[{i}]")
        _check_keys(c, {"variable", "utterance"}, f"confirms[{i}]")
        confirms.append(Confirm(str(c.get("variable")), str(c.get("utterance", ""))))
    cee_groups = []
    for i, g in enumerate(doc.get("cee", [])):
        g = _require_map(g, f"cee[{i}]")
        _check_keys(g, {"name", "utterance", "variables", "examples"}, f"cee[{i}]")
        gname = g.get("name") or ("cee-extraction" if i == 0 else f"cee-extraction-{i}")
        variables_list = g.get("variables", [])
        if not isinstance(variables_list, list) or not variables_list:
            raise SpecError(f"cee[{i}]: needs a non-empty variables list")
        cee_groups.append(
            CeeGroup(
                str(gname),
                str(g.get("utterance", "")),
                tuple(str(v) for v in variables_list),
                tuple(str(e) for e in g.get("examples", [])),
            )
        )
    return AgentSpec(
        name=name,
        prefix=str(prefix),
        three_valued=bool(doc.get("three_valued", False)),
        variables=variables,
        actions=actions,
        slot_fills=tuple(slot_fills),
        confirms=tuple(confirms),
        cee_groups=tuple(cee_groups),
    )


def load_spec_file(path) -> AgentSpec:
    with open(path, encoding="utf-8") as handle:
        return load_spec(handle.read())


# ── saving / JSON export ──────────────────────────────────────────────


def _outcome_doc(o: OutcomeSpec) -> dict:
    doc: dict = {}
    if o.name is not None:
        doc["name"] = o.name
    if o.fallback and o.name is not None:
        doc["fallback"] = True
    if o.check:
        doc["check"] = {"variable": o.check[0], "equals": o.check[1]}
    if o.updates:
        doc["updates"] = {k: (v in ("true",) if v in ("true", "false") else v) for k, v in o.updates}
    if o.values:
        doc["values"] = dict(o.values)
    if o.keywords:
        doc["keywords"] = list(o.keywords)
    if o.when is not None:
        doc["when"] = o.when
    if o.response is not None:
        doc["response"] = o.response
    if o.is_goal:
        doc["goal"] = True
    if o.followup is not None:
        doc["followup"] = o.followup
    return doc


def spec_to_doc(spec: AgentSpec) -> dict:
    """Plain-data form of the spec (used for saving and the gateway export)."""
    doc: dict = {"agent": spec.name}
    if spec.prefix != spec.name:
        doc["prefix"] = spec.prefix
    if spec.three_valued:
        doc["three_valued"] = True
    doc["variables"] = []
    for v in spec.variables:
        vdoc: dict = {"name": v.name, "kind": v.kind}
        if v.kind == "flag":
            vdoc["value"] = bool(v.value)
        else:
            if v.knowledge != "unknown":
                vdoc["knowledge"] = v.knowledge
                vdoc["value"] = v.value
        doc["variables"].append(vdoc)
    doc["actions"] = []
    for a in spec.actions:
        adoc: dict = {"name": a.name, "type": a.kind}
        if a.is_start:
            adoc["start"] = True
        if a.utterance is not None:
            adoc["utterance"] = a.utterance
        if a.endpoint is not None:
            adoc["endpoint"] = a.endpoint
        if a.response_field is not None:
            adoc["response_field"] = a.response_field
        if a.simulate is not None:
            adoc["simulate"] = a.simulate
        if a.max_applications is not None:
            adoc["max_applications"] = a.max_applications
        if a.needs:
            adoc["needs"] = [
                {"variable": n.variable, "is": n.requirement} for n in a.needs
            ]
        if a.outcomes:
            adoc["outcomes"] = [_outcome_doc(o) for o in a.outcomes]
        doc["actions"].append(adoc)
    if spec.slot_fills:
        doc["slotfills"] = [
            {"variable": s.variable, "utterance": s.utterance} for s in spec.slot_fills
        ]
    if spec.confirms:
        doc["confirms"] = [
            {"variable": c.variable, "utterance": c.utterance} for c in spec.confirms
        ]
    if spec.cee_groups:
        doc["cee"] = [
            {
                "name": g.name,
                "utterance": g.utterance,
                "variables": list(g.variables),
                "examples": list(g.examples),
            }
            for g in spec.cee_groups
        ]
    return doc


def save_spec(spec: AgentSpec) -> str:
    return yaml.safe_dump(spec_to_doc(spec), sort_keys=False, allow_unicode=True)


# ── validation ────────────────────────────────────────────────────────


def _knowledge_requirements(spec: AgentSpec) -> set[str]:
    """Variables with any uncertain use (drives per-variable 3-valued tracking)."""
    out = set()
    for v in spec.variables:
        if v.knowledge == "uncertain":
            out.add(v.name)
    for c in spec.confirms:
        out.add(c.variable)
    for a in spec.actions:
        for n in a.needs:
            if n.requirement == "uncertain":
                out.add(n.variable)
        for o in a.outcomes:
            for var, state in o.updates:
                if state == "uncertain":
                    out.add(var)
    return out


def tracked_uncertain(spec: AgentSpec, variable: VariableDecl) -> bool:
    """Whether the compiler keeps a maybe-known fluent for this variable."""
    if variable.kind == "flag":
        return False
    return spec.three_valued or variable.name in _knowledge_requirements(spec)


def validate(spec: AgentSpec) -> list[Diagnostic]:
    """Pure semantic validation; empty result means the spec is compilable."""
    out: list[Diagnostic] = []
    err = lambda loc, msg: out.append(Diagnostic("error", loc, msg))
    warn = lambda loc, msg: out.append(Diagnostic("warning", loc, msg))

    var_names = [v.name for v in spec.variables]
    for name in sorted({n for n in var_names if var_names.count(n) > 1}):
        err("variables", f"variable {name!r} declared more than once")
    variables = {v.name: v for v in spec.variables}

    action_names = [a.name for a in spec.actions]
    for name in sorted({n for n in action_names if action_names.count(n) > 1}):
        err("actions", f"action {name!r} declared more than once")
    declared_actions = set(action_names)

    def check_var_ref(loc: str, name: str, flag_ok: bool = True) -> VariableDecl | None:
        if name not in variables:
            err(loc, f"unknown variable {name!r}")
            return None
        v = variables[name]
        if not flag_ok and v.kind == "flag":
            err(loc, f"variable {name!r} is a flag")
        return v

    goal_count = 0
    starters = [a.name for a in spec.actions if a.is_start]
    if len(starters) > 1:
        err("actions", f"more than one start action: {', '.join(starters)}")

    for ai, action in enumerate(spec.actions):
        loc = f"actions[{ai}]"
        if action.kind == "dialogue" and action.utterance is None:
            err(loc, "dialogue action needs an utterance")
        if action.kind == "web":
            if action.endpoint is None:
                err(loc, "web action needs an endpoint")
            if action.response_field is None:
                err(loc, "web action needs a response_field")
        for ni, need in enumerate(action.needs):
            nloc = f"{loc}.needs[{ni}]"
            v = check_var_ref(nloc, need.variable)
            if v is None:
                continue
            if v.kind == "flag" and need.requirement not in ("true", "false"):
                err(nloc, f"flag {v.name!r} takes true/false, not {need.requirement!r}")
            if v.kind != "flag" and need.requirement in ("true", "false"):
                err(nloc, f"variable {v.name!r} takes a knowledge state, not a flag value")

        names = [o.name for o in action.outcomes if o.name is not None]
        for name in sorted({n for n in names if names.count(n) > 1}):
            err(loc, f"outcome {name!r} declared more than once")
        fallbacks = [o for o in action.outcomes if o.fallback]
        if len(fallbacks) > 1:
            err(loc, "more than one fallback outcome")
        if action.kind != "dialogue" and any(o.name is None for o in action.outcomes):
            err(loc, "only dialogue actions may declare an unnamed fallback outcome")
        if action.kind != "dialogue" and not action.outcomes:
            err(loc, f"{action.kind} action needs at least one outcome")

        self_forcing = [o.followup == action.name for o in action.outcomes]
        if action.outcomes and all(self_forcing) and action.max_applications is None:
            err(loc, f"every outcome forces {action.name!r} back onto itself with no guard")

        for oi, o in enumerate(action.outcomes):
            oloc = f"{loc}.outcomes[{oi}]"
            if o.is_goal:
                goal_count += 1
            if o.followup is not None and o.followup not in declared_actions:
                err(oloc, f"forced followup names undeclared action {o.followup!r}")
            if o.check:
                check_var_ref(f"{oloc}.check", o.check[0], flag_ok=False)
            for var, state in o.updates:
                v = check_var_ref(f"{oloc}.updates", var)
                if v is None:
                    continue
                if v.kind == "flag" and state not in ("true", "false"):
                    err(f"{oloc}.updates", f"flag {var!r} takes true/false")
                if v.kind != "flag" and state in ("true", "false"):
                    err(f"{oloc}.updates", f"variable {var!r} takes a knowledge state")
            for var, _ in o.values:
                check_var_ref(f"{oloc}.values", var, flag_ok=False)
            if action.kind == "system":
                last = oi == len(action.outcomes) - 1
                if o.when in (None, "otherwise") and not last:
                    err(oloc, "only the last outcome of a system action may omit a condition")
            if action.kind == "web" and o.response is None:
                err(oloc, "web outcomes select on a response value")

    if goal_count == 0:
        err("actions", "no goal outcome anywhere in the specification")

    for i, s in enumerate(spec.slot_fills):
        check_var_ref(f"slotfills[{i}]", s.variable, flag_ok=False)
    for i, c in enumerate(spec.confirms):
        v = check_var_ref(f"confirms[{i}]", c.variable, flag_ok=False)
        if v is not None:
            becomes_uncertain = v.knowledge == "uncertain" or any(
                state == "uncertain" and var == c.variable
                for a in spec.actions
                for o in a.outcomes
                for var, state in o.updates
            )
            if not becomes_uncertain:
                warn(
                    f"confirms[{i}]",
                    f"variable {c.variable!r} can never be uncertain; the confirm is unreachable",
                )
    for i, g in enumerate(spec.cee_groups):
        for var in g.variables:
            check_var_ref(f"cee[{i}]", var, flag_ok=False)
    return out
