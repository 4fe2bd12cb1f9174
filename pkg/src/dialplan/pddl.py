"""Data model, parser, and printer for the propositional PDDL dialect.

The dialect is STRIPS plus arbitrarily nested ``and``/``oneof`` effects.
``oneof`` clauses and their children may carry execution labels via the
``labeled-oneof``/``outcome`` forms; stripping labels never changes planning
semantics. Everything is propositional: types, objects, and action
parameters are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .errors import ModelError, ParseError

_NAME_CHARS = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_")

LEAF = "leaf"
AND = "and"
ONEOF = "oneof"


def _valid_name(name: str) -> bool:
    return bool(name) and name[0].isalpha() and set(name) <= _NAME_CHARS


@dataclass(frozen=True, slots=True)
class Literal:
    """A fluent or its negation. Negation only ever appears here, at leaves."""

    fluent: str
    positive: bool = True

    def negate(self) -> "Literal":
        return Literal(self.fluent, not self.positive)

    def __str__(self) -> str:
        return f"({self.fluent})" if self.positive else f"(not ({self.fluent}))"


@dataclass(frozen=True, slots=True)
class EffectNode:
    """One node of an action's effect tree.

    ``name`` is the determiner handle of a labeled oneof; ``label`` is the
    outcome label this node carries as the child of a labeled oneof.
    """

    kind: str
    literal: Literal | None = None
    children: tuple["EffectNode", ...] = ()
    name: str | None = None
    label: str | None = None

    def __post_init__(self) -> None:
        if self.kind == LEAF:
            if self.literal is None or self.children:
                raise ModelError("leaf effect must hold exactly one literal")
        elif self.kind in (AND, ONEOF):
            if self.literal is not None:
                raise ModelError(f"{self.kind} effect cannot hold a literal")
            if self.kind == ONEOF and not self.children:
                raise ModelError("oneof effect needs at least one child")
            labels = [c.label for c in self.children if c.label is not None]
            if self.kind == ONEOF and len(labels) != len(set(labels)):
                raise ModelError(f"duplicate outcome labels in oneof {self.name or ''!r}")
        else:
            raise ModelError(f"unknown effect kind {self.kind!r}")

    def fluents(self) -> set[str]:
        if self.kind == LEAF:
            return {self.literal.fluent}
        out: set[str] = set()
        for c in self.children:
            out |= c.fluents()
        return out


def leaf(fluent: str, positive: bool = True) -> EffectNode:
    return EffectNode(LEAF, literal=Literal(fluent, positive))


def and_(children: list[EffectNode] | tuple[EffectNode, ...]) -> EffectNode:
    # repeated conjuncts are normalized away (order-preserving)
    seen: list[EffectNode] = []
    for c in children:
        if c not in seen:
            seen.append(c)
    return EffectNode(AND, children=tuple(seen))


def oneof(
    children: list[EffectNode] | tuple[EffectNode, ...],
    name: str | None = None,
) -> EffectNode:
    return EffectNode(ONEOF, children=tuple(children), name=name)


def with_label(node: EffectNode, label: str) -> EffectNode:
    return EffectNode(node.kind, node.literal, node.children, node.name, label)


def iter_nodes(root: EffectNode, prefix: str = "e") -> Iterator[tuple[str, EffectNode]]:
    """Preorder traversal yielding (path-derived id, node)."""
    yield prefix, root
    for i, child in enumerate(root.children):
        yield from iter_nodes(child, f"{prefix}.{i}")


def oneof_key(node_id: str, node: EffectNode) -> str:
    """Registry key of a oneof node: its label if present, else its path id."""
    return node.name or node_id


def outcome_label(parent: EffectNode, index: int) -> str:
    """Label of a oneof child, synthesized as o<index> when undeclared."""
    child = parent.children[index]
    return child.label if child.label is not None else f"o{index}"


def strip_labels(node: EffectNode) -> EffectNode:
    """Drop all oneof names and outcome labels (planning semantics preserved)."""
    return EffectNode(
        node.kind, node.literal, tuple(strip_labels(c) for c in node.children)
    )


@dataclass(frozen=True, slots=True)
class ActionDef:
    name: str
    precondition: tuple[Literal, ...]
    effect: EffectNode

    def __post_init__(self) -> None:
        seen = set()
        for lit in self.precondition:
            if lit in seen:
                raise ModelError(f"duplicate precondition literal {lit} in {self.name}")
            seen.add(lit)

    def positive_preconditions(self) -> frozenset[str]:
        return frozenset(l.fluent for l in self.precondition if l.positive)

    def negative_preconditions(self) -> frozenset[str]:
        return frozenset(l.fluent for l in self.precondition if not l.positive)

    def applicable(self, state: frozenset[str]) -> bool:
        return self.positive_preconditions() <= state and not (
            self.negative_preconditions() & state
        )


@dataclass(frozen=True, slots=True)
class DomainDef:
    name: str
    predicates: tuple[str, ...]
    actions: tuple[ActionDef, ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.predicates)) != len(self.predicates):
            dupes = sorted({p for p in self.predicates if self.predicates.count(p) > 1})
            raise ModelError(f"duplicate predicate declarations: {', '.join(dupes)}")
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise ModelError("duplicate action names in domain")
        declared = set(self.predicates)
        for action in self.actions:
            for lit in action.precondition:
                if lit.fluent not in declared:
                    raise ModelError(
                        f"action {action.name}: undeclared predicate {lit.fluent!r} in precondition"
                    )
            missing = action.effect.fluents() - declared
            if missing:
                raise ModelError(
                    f"action {action.name}: undeclared predicate {sorted(missing)[0]!r} in effect"
                )

    def action(self, name: str) -> ActionDef:
        for a in self.actions:
            if a.name == name:
                return a
        raise KeyError(name)


@dataclass(frozen=True, slots=True)
class ProblemDef:
    name: str
    domain_name: str
    init: tuple[str, ...]
    goal: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.init)) != len(self.init):
            raise ModelError("duplicate fluents in :init")
        if len(set(self.goal)) != len(self.goal):
            raise ModelError("duplicate fluents in :goal")


def check_problem(domain: DomainDef, problem: ProblemDef) -> None:
    """Cross-file invariants: problem references the domain's predicates."""
    if problem.domain_name != domain.name:
        raise ModelError(
            f"problem targets domain {problem.domain_name!r}, got {domain.name!r}"
        )
    declared = set(domain.predicates)
    for fluent in problem.init:
        if fluent not in declared:
            raise ModelError(f"undeclared predicate {fluent!r} in :init")
    for fluent in problem.goal:
        if fluent not in declared:
            raise ModelError(f"undeclared predicate {fluent!r} in :goal")


# ── s-expression reader ───────────────────────────────────────────────


@dataclass(slots=True)
class _Atom:
    text: str
    line: int
    col: int


@dataclass(slots=True)
class _List:
    items: list
    line: int
    col: int


def _read_sexpr(text: str):
    """Tokenize and read a single s-expression; ';' comments are discarded."""
    i, line, col = 0, 1, 1
    n = len(text)
    stack: list[_List] = []
    top: _List | None = None

    def emit(node, at_line: int, at_col: int) -> None:
        nonlocal top
        if stack:
            stack[-1].items.append(node)
        elif top is None:
            raise ParseError("content outside the top-level form", at_line, at_col)
        else:
            raise ParseError("trailing content after top-level form", at_line, at_col)

    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
        elif ch in " \t\r":
            i += 1
            col += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == "(":
            node = _List([], line, col)
            if not stack and top is None:
                top = node
            else:
                emit(node, line, col)
            stack.append(node)
            i += 1
            col += 1
        elif ch == ")":
            if not stack:
                raise ParseError("unbalanced ')'", line, col)
            stack.pop()
            i += 1
            col += 1
        else:
            j = i
            while j < n and text[j] not in " \t\r\n();":
                j += 1
            emit(_Atom(text[i:j], line, col), line, col)
            col += j - i
            i = j
    if stack:
        raise ParseError("unbalanced '(': form never closed", stack[-1].line, stack[-1].col)
    if top is None:
        raise ParseError("empty input", line, col)
    return top


def _expect_atom(node, what: str) -> _Atom:
    if not isinstance(node, _Atom):
        raise ParseError(f"expected {what}", node.line, node.col)
    return node


def _expect_list(node, what: str) -> _List:
    if not isinstance(node, _List):
        raise ParseError(f"expected {what}", node.line, node.col)
    return node


def _head(lst: _List) -> str:
    if not lst.items or not isinstance(lst.items[0], _Atom):
        return ""
    return lst.items[0].text


def _parse_atom_fluent(node) -> tuple[str, int, int]:
    lst = _expect_list(node, "a fluent like (name)")
    if not lst.items or not isinstance(lst.items[0], _Atom):
        raise ParseError("expected a fluent like (name)", lst.line, lst.col)
    if len(lst.items) > 1:
        raise ParseError(
            "parameterized atoms are not supported (propositional dialect only)",
            lst.line,
            lst.col,
        )
    name = lst.items[0].text
    if not _valid_name(name):
        raise ParseError(f"invalid fluent name {name!r}", lst.line, lst.col)
    return name, lst.line, lst.col


def _parse_literal(node, declared: set[str]) -> Literal:
    lst = _expect_list(node, "a literal")
    if _head(lst) == "not":
        if len(lst.items) != 2:
            raise ParseError("(not ...) takes exactly one fluent", lst.line, lst.col)
        name, line, col = _parse_atom_fluent(lst.items[1])
        lit = Literal(name, positive=False)
    else:
        name, line, col = _parse_atom_fluent(lst)
        lit = Literal(name, positive=True)
    if name not in declared:
        raise ParseError(f"undeclared predicate {name!r}", line, col)
    return lit


def _parse_precondition(node, declared: set[str]) -> tuple[Literal, ...]:
    lst = _expect_list(node, "a precondition")
    if _head(lst) == "and":
        parts = lst.items[1:]
    else:
        parts = [lst]
    out: list[Literal] = []
    for part in parts:
        lit = _parse_literal(part, declared)
        if lit not in out:
            out.append(lit)
    return tuple(out)


def _parse_effect(node, declared: set[str]) -> EffectNode:
    lst = _expect_list(node, "an effect")
    head = _head(lst)
    if head == "or":
        raise ParseError("'or' is not allowed inside effects", lst.line, lst.col)
    if head == "and":
        return and_([_parse_effect(c, declared) for c in lst.items[1:]])
    if head == "oneof":
        if len(lst.items) < 2:
            raise ParseError("oneof needs at least one child", lst.line, lst.col)
        return oneof([_parse_effect(c, declared) for c in lst.items[1:]])
    if head == "labeled-oneof":
        if len(lst.items) < 3:
            raise ParseError(
                "labeled-oneof needs a name and at least one outcome", lst.line, lst.col
            )
        name = _expect_atom(lst.items[1], "a oneof name").text
        children = []
        for child in lst.items[2:]:
            clist = _expect_list(child, "an (outcome ...) form")
            if _head(clist) != "outcome":
                raise ParseError(
                    "children of labeled-oneof must be (outcome ...) forms",
                    clist.line,
                    clist.col,
                )
            if len(clist.items) < 2:
                raise ParseError("outcome needs a label", clist.line, clist.col)
            label = _expect_atom(clist.items[1], "an outcome label").text
            body = clist.items[2:]
            if len(body) == 1:
                sub = _parse_effect(body[0], declared)
            else:
                sub = and_([_parse_effect(b, declared) for b in body])
            children.append(with_label(sub, label))
        try:
            return EffectNode(ONEOF, children=tuple(children), name=name)
        except ModelError as exc:
            raise ParseError(str(exc), lst.line, lst.col) from exc
    if head == "not":
        if len(lst.items) == 2 and isinstance(lst.items[1], _List):
            inner = lst.items[1]
            if _head(inner) in ("and", "oneof", "labeled-oneof"):
                raise ParseError(
                    "negation is only allowed at the leaf level of an effect",
                    lst.line,
                    lst.col,
                )
        return EffectNode(LEAF, literal=_parse_literal(lst, declared))
    if head in ("when", "forall", "probabilistic", "increase", "decrease"):
        raise ParseError(f"unsupported effect construct {head!r}", lst.line, lst.col)
    return EffectNode(LEAF, literal=_parse_literal(lst, declared))


def _require_empty(lst: _List, what: str) -> None:
    if len(lst.items) > 1:
        raise ParseError(
            f"{what} are not supported (propositional dialect only)", lst.line, lst.col
        )


def parse_domain(text: str) -> DomainDef:
    """Parse a domain file. The printed form of the result re-parses equal."""
    top = _expect_list(_read_sexpr(text), "(define ...)")
    if _head(top) != "define":
        raise ParseError("expected (define (domain ...) ...)", top.line, top.col)
    name: str | None = None
    predicates: list[str] = []
    pred_positions: dict[str, tuple[int, int]] = {}
    actions: list[ActionDef] = []
    for section in top.items[1:]:
        lst = _expect_list(section, "a domain section")
        head = _head(lst)
        if head == "domain":
            name = _expect_atom(lst.items[1], "a domain name").text
        elif head == ":requirements":
            pass
        elif head == ":types":
            _require_empty(lst, "types")
        elif head == ":constants":
            _require_empty(lst, "constants")
        elif head == ":predicates":
            for p in lst.items[1:]:
                pname, line, col = _parse_atom_fluent(p)
                if pname in pred_positions:
                    raise ParseError(f"duplicate predicate {pname!r}", line, col)
                pred_positions[pname] = (line, col)
                predicates.append(pname)
        elif head == ":action":
            actions.append(_parse_action(lst, set(predicates)))
        else:
            raise ParseError(f"unsupported domain section {head!r}", lst.line, lst.col)
    if name is None:
        raise ParseError("domain has no name", top.line, top.col)
    try:
        return DomainDef(name, tuple(predicates), tuple(actions))
    except ModelError as exc:
        raise ParseError(str(exc), top.line, top.col) from exc


def _parse_action(lst: _List, declared: set[str]) -> ActionDef:
    if len(lst.items) < 2 or not isinstance(lst.items[1], _Atom):
        raise ParseError("action needs a name", lst.line, lst.col)
    name = lst.items[1].text
    if not _valid_name(name):
        raise ParseError(f"invalid action name {name!r}", lst.line, lst.col)
    precondition: tuple[Literal, ...] = ()
    effect: EffectNode | None = None
    i = 2
    while i < len(lst.items):
        key = _expect_atom(lst.items[i], "an action keyword").text
        if i + 1 >= len(lst.items):
            raise ParseError(f"{key} is missing its body", lst.line, lst.col)
        body = lst.items[i + 1]
        if key == ":parameters":
            params = _expect_list(body, "()")
            if params.items:
                raise ParseError(
                    "action parameters are not supported (propositional dialect only)",
                    params.line,
                    params.col,
                )
        elif key == ":precondition":
            precondition = _parse_precondition(body, declared)
        elif key == ":effect":
            effect = _parse_effect(body, declared)
        else:
            raise ParseError(f"unsupported action keyword {key!r}", lst.line, lst.col)
        i += 2
    if effect is None:
        raise ParseError(f"action {name} has no effect", lst.line, lst.col)
    return ActionDef(name, precondition, effect)


def parse_problem(text: str, domain: DomainDef | None = None) -> ProblemDef:
    """Parse a problem file; when a domain is given, init/goal are checked against it."""
    top = _expect_list(_read_sexpr(text), "(define ...)")
    if _head(top) != "define":
        raise ParseError("expected (define (problem ...) ...)", top.line, top.col)
    name: str | None = None
    domain_name: str | None = None
    init: list[str] = []
    goal: list[str] = []
    declared = set(domain.predicates) if domain is not None else None

    def check(fluent: str, line: int, col: int) -> None:
        if declared is not None and fluent not in declared:
            raise ParseError(f"undeclared predicate {fluent!r}", line, col)

    for section in top.items[1:]:
        lst = _expect_list(section, "a problem section")
        head = _head(lst)
        if head == "problem":
            name = _expect_atom(lst.items[1], "a problem name").text
        elif head == ":domain":
            domain_name = _expect_atom(lst.items[1], "a domain name").text
        elif head == ":objects":
            _require_empty(lst, "objects")
        elif head == ":init":
            for item in lst.items[1:]:
                ilist = _expect_list(item, "an init fluent")
                if _head(ilist) == "not":
                    raise ParseError(
                        "init fluents must be simple positive atoms", ilist.line, ilist.col
                    )
                fname, line, col = _parse_atom_fluent(ilist)
                check(fname, line, col)
                if fname not in init:
                    init.append(fname)
        elif head == ":goal":
            body = _expect_list(lst.items[1], "a goal") if len(lst.items) > 1 else None
            if body is None:
                raise ParseError("goal is empty", lst.line, lst.col)
            parts = body.items[1:] if _head(body) == "and" else [body]
            for item in parts:
                ilist = _expect_list(item, "a goal fluent")
                if _head(ilist) == "not":
                    raise ParseError(
                        "goal fluents must be simple positive atoms", ilist.line, ilist.col
                    )
                fname, line, col = _parse_atom_fluent(ilist)
                check(fname, line, col)
                if fname not in goal:
                    goal.append(fname)
        else:
            raise ParseError(f"unsupported problem section {head!r}", lst.line, lst.col)
    if name is None or domain_name is None:
        raise ParseError("problem needs a name and a :domain", top.line, top.col)
    problem = ProblemDef(name, domain_name, tuple(init), tuple(goal))
    if domain is not None:
        check_problem(domain, problem)
    return problem


# ── printer ───────────────────────────────────────────────────────────


def _print_effect(node: EffectNode, indent: int, out: list[str]) -> None:
    pad = " " * indent
    if node.kind == LEAF:
        lit = node.literal
        if lit.positive:
            out.append(f"{pad}({lit.fluent})")
        else:
            out.append(f"{pad}(not ({lit.fluent}))")
        return
    if node.kind == AND:
        out.append(f"{pad}(and")
        for child in node.children:
            _print_effect(child, indent + 4, out)
        out.append(f"{pad})")
        return
    labeled = node.name is not None or any(c.label is not None for c in node.children)
    if labeled:
        if node.name is None or any(c.label is None for c in node.children):
            raise ModelError(
                "cannot print a partially labeled oneof: name and all outcome labels required"
            )
        out.append(f"{pad}(labeled-oneof {node.name}")
        for child in node.children:
            out.append(f"{pad}    (outcome {child.label}")
            # the label lives in the (outcome ...) wrapper, not the body
            body = EffectNode(child.kind, child.literal, child.children, child.name)
            _print_effect(body, indent + 8, out)
            out.append(f"{pad}    )")
        out.append(f"{pad})")
    else:
        out.append(f"{pad}(oneof")
        for child in node.children:
            _print_effect(child, indent + 4, out)
        out.append(f"{pad})")


def print_domain(domain: DomainDef) -> str:
    out: list[str] = [f"(define (domain {domain.name})", "    (:requirements :strips)"]
    out.append("    (:predicates")
    for p in domain.predicates:
        out.append(f"        ({p})")
    out.append("    )")
    for action in domain.actions:
        out.append(f"    (:action {action.name}")
        out.append("        :parameters ()")
        out.append("        :precondition")
        out.append("            (and")
        for lit in action.precondition:
            out.append(f"                {lit}")
        out.append("            )")
        out.append("        :effect")
        _print_effect(action.effect, 12, out)
        out.append("    )")
    out.append(")")
    return "\n".join(out) + "\n"


def print_problem(problem: ProblemDef) -> str:
    out = [
        f"(define (problem {problem.name})",
        f"    (:domain {problem.domain_name})",
        "    (:init",
    ]
    for fluent in problem.init:
        out.append(f"        ({fluent})")
    out.append("    )")
    out.append("    (:goal")
    out.append("        (and")
    for fluent in problem.goal:
        out.append(f"            ({fluent})")
    out.append("        )")
    out.append("    )")
    out.append(")")
    return "\n".join(out) + "\n"
