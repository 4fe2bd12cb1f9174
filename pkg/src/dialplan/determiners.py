"""Built-in outcome determiners.

A determiner decides which child of a oneof occurred, given the action's
callback payload and the precondition-filtered context, and may produce
values for the fluents the selected outcome adds. All determiners are pure
functions of (config, payload, context).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import DeterminationError

_TEMPLATE_RE = re.compile(r"\$([A-Za-z_][A-Za-z0-9_-]*)")


def render_template(template: str, values: dict[str, object]) -> str:
    """Substitute $name references; unknown names stay verbatim."""

    def sub(match: re.Match) -> str:
        name = match.group(1)
        if name in values and values[name] is not None:
            return str(values[name])
        return match.group(0)

    return _TEMPLATE_RE.sub(sub, template)


def _phrase_to_regex(phrase: str) -> tuple[re.Pattern, list[str]]:
    # odd split indices are capture names, even are literal segments; a
    # trailing capture is greedy (grabs the rest of the utterance), inner
    # captures are lazy and bounded by the literal that follows
    parts = _TEMPLATE_RE.split(phrase)
    names: list[str] = []
    pattern = ""
    for i, part in enumerate(parts):
        if i % 2 == 0:
            if not part:
                continue
            core = r"\s+".join(re.escape(tok) for tok in part.lower().split())
            if part[0].isspace() and pattern:
                core = r"\s+" + core  # whitespace boundary after a capture
            if part[-1].isspace() and i < len(parts) - 1:
                core = core + r"\s+"  # whitespace boundary before a capture
            pattern += core
        else:
            names.append(part)
            is_final = i == len(parts) - 2 and not parts[-1].strip()
            pattern += r"(.+)" if is_final else r"(.+?)"
    return re.compile(pattern, re.IGNORECASE | re.DOTALL), names


def match_phrase(phrase: str, utterance: str) -> tuple[bool, int, dict[str, str]]:
    """Case-insensitive phrase match.

    Returns (matched, matched literal length, captures). Phrases may embed
    $name placeholders which capture the text at their position.
    """
    if "$" not in phrase:
        found = phrase.lower() in utterance.lower()
        return found, len(phrase) if found else 0, {}
    literal_len = sum(
        len(seg.strip()) for i, seg in enumerate(_TEMPLATE_RE.split(phrase)) if i % 2 == 0
    )
    regex, names = _phrase_to_regex(phrase)
    match = regex.search(utterance)
    if not match:
        return False, 0, {}
    captures: dict[str, str] = {}
    for name, raw in zip(names, match.groups()):
        value = (raw or "").strip().strip(".,!?;:")
        if value:
            captures[name] = value
    if len(captures) != len(set(names)):
        return False, 0, {}
    return True, literal_len, captures


# ── condition expressions (system actions) ────────────────────────────
#
# expr   := or ; or := and ('or' and)* ; and := not ('and' not)*
# not    := 'not' not | cmp
# cmp    := operand (('='|'=='|'!='|'<'|'<='|'>'|'>=') operand)?
# operand:= number | 'text' | "text" | identifier | '(' expr ')'

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>-?\d+(?:\.\d+)?)(?![\w-])|(?P<str>'[^']*'|\"[^\"]*\")"
    r"|(?P<op><=|>=|==|!=|=|<|>)|(?P<lp>\()|(?P<rp>\))"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_-]*))"
)


def _tokenize_expr(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if not match or match.end() == pos:
            if text[pos:].strip():
                raise DeterminationError(f"bad condition syntax near {text[pos:pos+10]!r}")
            break
        pos = match.end()
        kind = match.lastgroup
        tokens.append((kind, match.group(kind)))
    return tokens


class _ExprParser:
    def __init__(self, text: str, context: dict[str, object]):
        self.tokens = _tokenize_expr(text)
        self.pos = 0
        self.context = context

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        token = self.peek()
        if token is None:
            raise DeterminationError("condition ended unexpectedly")
        self.pos += 1
        return token

    def parse(self) -> bool:
        value = self.or_expr()
        if self.peek() is not None:
            raise DeterminationError(f"trailing tokens in condition: {self.peek()[1]!r}")
        return _truthy(value)

    def or_expr(self):
        value = self.and_expr()
        while self.peek() == ("id", "or"):
            self.take()
            rhs = self.and_expr()
            value = _truthy(value) or _truthy(rhs)
        return value

    def and_expr(self):
        value = self.not_expr()
        while self.peek() == ("id", "and"):
            self.take()
            rhs = self.not_expr()
            value = _truthy(value) and _truthy(rhs)
        return value

    def not_expr(self):
        if self.peek() == ("id", "not"):
            self.take()
            return not _truthy(self.not_expr())
        return self.comparison()

    def comparison(self):
        left = self.operand()
        token = self.peek()
        if token and token[0] == "op":
            op = self.take()[1]
            right = self.operand()
            return _compare(op, left, right)
        return left

    def operand(self):
        kind, text = self.take()
        if kind == "num":
            return float(text)
        if kind == "str":
            return text[1:-1]
        if kind == "lp":
            value = self.or_expr()
            if self.peek() != ("rp", ")"):
                raise DeterminationError("missing ')' in condition")
            self.take()
            return value
        if kind == "id":
            if text in ("true", "false"):
                return text == "true"
            return self.context.get(text)
        raise DeterminationError(f"unexpected token {text!r} in condition")


def _truthy(value) -> bool:
    return value not in (None, "", False)


def _numeric(value):
    if isinstance(value, bool):
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


def _compare(op: str, left, right) -> bool:
    lnum, rnum = _numeric(left), _numeric(right)
    if op in ("=", "=="):
        if lnum is not None and rnum is not None:
            return lnum == rnum
        return str(left) == str(right)
    if op == "!=":
        if lnum is not None and rnum is not None:
            return lnum != rnum
        return str(left) != str(right)
    if lnum is None or rnum is None:
        raise DeterminationError(
            f"ordering comparison {op!r} needs numeric operands, got {left!r} and {right!r}"
        )
    if op == "<":
        return lnum < rnum
    if op == "<=":
        return lnum <= rnum
    if op == ">":
        return lnum > rnum
    return lnum >= rnum


def evaluate_condition(expression: str, context: dict[str, object]) -> bool:
    return _ExprParser(expression, context).parse()


# ── determiner kinds ──────────────────────────────────────────────────


def _rendered_values(
    targets: dict[str, str], variables: dict[str, object]
) -> dict[str, object]:
    return {fluent: render_template(str(t), variables) for fluent, t in targets.items()}


def keyword_intent(
    config: dict, payload, context: dict[str, object]
) -> tuple[str, dict[str, object]]:
    """Pick the outcome with the longest matching keyword phrase, else the fallback."""
    utterance = "" if payload is None else str(payload)
    best = (-1, 0, None, {})  # (score, order, entry, captures)
    for order, entry in enumerate(config.get("outcomes", [])):
        for phrase in entry.get("keywords", []):
            matched, score, captures = match_phrase(phrase, utterance)
            if matched and (score > best[0] or (score == best[0] and order < best[1])):
                best = (score, order, entry, captures)
    if best[2] is None:
        label = config.get("fallback")
        if label is None:
            raise DeterminationError("keyword-intent config is missing its fallback label")
        entry = next(
            (e for e in config.get("outcomes", []) if e.get("label") == label), {}
        )
        captures = {}
    else:
        entry, captures = best[2], best[3]
        label = entry["label"]
    values: dict[str, object] = {}
    target = "maybe-have_{}" if config.get("uncertain_captures") else "have_{}"
    for var, text in captures.items():
        values[target.format(var)] = text
    merged = {**context, **captures}
    values.update(_rendered_values(entry.get("values", {}), merged))
    return label, values


def ordered_condition(
    config: dict, payload, context: dict[str, object]
) -> tuple[str, dict[str, object]]:
    """First outcome whose condition holds; a missing condition is the catch-all."""
    for entry in config.get("conditions", []):
        when = entry.get("when")
        if when is None or evaluate_condition(when, context):
            return entry["label"], _rendered_values(entry.get("values", {}), context)
    raise DeterminationError("no condition matched and there is no catch-all outcome")


def response_map(
    config: dict, payload, context: dict[str, object]
) -> tuple[str, dict[str, object]]:
    """Map a response-document field onto an outcome label."""
    if not isinstance(payload, dict):
        raise DeterminationError(
            f"response-map determiner needs a response document, got {type(payload).__name__}"
        )
    fieldname = config["field"]
    if fieldname not in payload:
        raise DeterminationError(f"response document has no field {fieldname!r}")
    value = str(payload[fieldname])
    mapping = config.get("map", {})
    if value not in mapping:
        raise DeterminationError(f"unmapped response value {value!r} for field {fieldname!r}")
    label = mapping[value]
    merged = {**context, **{k: v for k, v in payload.items()}}
    values = _rendered_values(config.get("values", {}).get(label, {}), merged)
    return label, values


def run_determiner(
    config: dict, payload, context: dict[str, object]
) -> tuple[str, dict[str, object]]:
    kind = config.get("kind")
    if kind == "keyword-intent":
        return keyword_intent(config, payload, context)
    if kind == "ordered-condition":
        return ordered_condition(config, payload, context)
    if kind == "response-map":
        return response_map(config, payload, context)
    if kind == "scripted":
        raise DeterminationError("scripted determiners need a Scripted instance, not a config")
    raise DeterminationError(f"unknown determiner kind {kind!r}")


@dataclass
class Scripted:
    """Fixed script of selections, consumed one per invocation."""

    script: list
    calls: int = 0

    def __call__(self, payload, context) -> tuple[str, dict[str, object]]:
        if self.calls >= len(self.script):
            raise DeterminationError("scripted determiner ran out of selections")
        item = self.script[self.calls]
        self.calls += 1
        if isinstance(item, tuple):
            return item[0], dict(item[1])
        return item, {}


@dataclass
class Counting:
    """Wrap a determiner and count invocations (used to verify laziness)."""

    inner: object
    calls: int = 0

    def __call__(self, payload, context):
        self.calls += 1
        return self.inner(payload, context)


def registry_from_manifest(det_configs: dict) -> dict:
    """Callable registry keyed by oneof label."""

    def bind(cfg):
        return lambda payload, context: run_determiner(cfg, payload, context)

    return {label: bind(cfg) for label, cfg in det_configs.items()}
