#!/usr/bin/env python3
"""Regenerate the Car Inspection fixture family (1..4 parts).

Usage: python3 scripts/gen_car_inspection.py [outdir]
"""

from __future__ import annotations

import sys
from pathlib import Path

PARTS = [
    {
        "key": "spark-plug",
        "variable": "spark_plug_status",
        "ask_utterance": "How do the spark plugs look?",
        "check": "pass_status_options",
        "start_outcome": "spark-plug",
        "start_keywords": ["spark plug", "spark"],
        "message": "Recorded the spark plug status.",
    },
    {
        "key": "break-pad",
        "variable": "break_pad_status",
        "ask_utterance": "How do the break pads look?",
        "check": "pass_status_options",
        "start_outcome": "break-pad",
        "start_keywords": ["break pad", "brakes", "break-pad"],
        "message": "Recorded the break pad status.",
    },
    {
        "key": "clutch-seal-tightness",
        "variable": "clutch_seal_tightness_status",
        "ask_utterance": "How tight is the clutch seal?",
        "check": "clutch_seal_tightness_status",
        "start_outcome": "clutch-seal-tightness",
        "start_keywords": ["clutch"],
        "message": "Recorded the clutch seal tightness.",
    },
    {
        "key": "oil-level",
        "variable": "oil_status",
        "ask_utterance": "What is the oil level?",
        "check": "oil_status",
        "start_outcome": "oil",
        "start_keywords": ["oil"],
        "message": "Recorded the oil level.",
    },
]

ASK_DETECTED_KEYWORDS = ["found", "looks", "fine", "good", "solid", "tight", "full"]
ASK_SWITCH_KEYWORDS = ["actually", "instead", "wait", "check the"]
START_WHAT_KEYWORDS = ["what can you do", "what are my options", "help me understand"]
START_SWITCH_KEYWORDS = [
    "you decide", "take over", "go ahead", "you pick", "take it from here",
]


def indent(lines: list[str], by: int) -> list[str]:
    return [" " * by + line if line else line for line in lines]


def quote(text: str) -> str:
    return '"' + text.replace('"', '\\"') + '"'


def keyword_list(words: list[str]) -> str:
    return "[" + ", ".join(quote(w) for w in words) + "]"


def generate(n_parts: int) -> str:
    parts = PARTS[:n_parts]
    lines: list[str] = [
        "# Car Inspection agent, %d part%s." % (n_parts, "s" if n_parts > 1 else ""),
        "agent: Car-Inspection",
        "prefix: dialogue-disambiguation",
        "three_valued: true",
        "",
        "variables:",
    ]
    variables = [p["variable"] for p in parts[:2]]
    variables.append("user_initiative_message")
    variables.extend(p["variable"] for p in parts[2:3])
    variables.append("pass_status_options")
    variables.extend(p["variable"] for p in parts[3:4])
    for var in variables:
        if var == "user_initiative_message":
            lines.append(
                "  - {name: user_initiative_message, kind: entity, knowledge: known, value: hello}"
            )
        else:
            lines.append("  - {name: %s, kind: entity}" % var)
    lines.append("  - {name: user_initiative, kind: flag, value: true}")
    lines.append("  - {name: message, kind: entity}")
    lines.append("")
    lines.append("actions:")

    lines += [
        "  - name: state-message",
        "    type: dialogue",
        '    utterance: "$message"',
        "    needs:",
        "      - {variable: message, is: known}",
        "    outcomes:",
        "      - updates: {message: unknown}",
        "",
        "  - name: end_conversation",
        "    type: dialogue",
        '    utterance: "That completes the inspection. Goodbye!"',
        "    needs:",
    ]
    for part in reversed(parts):
        lines.append("      - {variable: %s, is: known}" % part["variable"])
    lines += [
        "    outcomes:",
        "      - goal: true",
        "",
    ]

    for part in parts:
        lines += [
            "  - name: ask-for_%s" % part["key"],
            "    type: dialogue",
            "    utterance: %s" % quote(part["ask_utterance"]),
            "    needs:",
            "      - {variable: user_initiative, is: false}",
            "      - {variable: %s, is: unknown}" % part["variable"],
            "    outcomes:",
            "      - name: initiative-switch",
            "        keywords: %s" % keyword_list(ASK_SWITCH_KEYWORDS),
            "        updates: {user_initiative_message: known, user_initiative: true}",
            "      - name: detected",
            "        keywords: %s" % keyword_list(ASK_DETECTED_KEYWORDS),
            "        check: {variable: %s, equals: found}" % part["check"],
            "        updates: {message: known, %s: known%s}"
            % (
                part["variable"],
                ", %s: known" % part["check"] if part["check"] != part["variable"] else "",
            ),
            # when the check names the part variable itself, its value comes
            # from the check; otherwise record a plain marker value
            "        values: {message: %s%s}"
            % (
                quote(part["message"]),
                ", %s: reported" % part["variable"]
                if part["check"] != part["variable"] else "",
            ),
            "        followup: state-message",
            "      - name: help-local-options",
            "        fallback: true",
            "        updates: {message: known}",
            "        values: {message: %s}"
            % quote("You can tell me the status, or hand the lead back to me."),
            "        followup: state-message",
            "",
        ]

    lines += [
        "  - name: start_conversation",
        "    type: dialogue",
        "    start: true",
        '    utterance: "Hello! I can help inspect the car. What should we look at?"',
        "    needs:",
        "      - {variable: user_initiative_message, is: known}",
        "      - {variable: user_initiative, is: true}",
        "    outcomes:",
        "      - name: what",
        "        keywords: %s" % keyword_list(START_WHAT_KEYWORDS),
        "        updates: {user_initiative_message: known}",
        "      - name: initiative-switch",
        "        keywords: %s" % keyword_list(START_SWITCH_KEYWORDS),
        "        updates: {user_initiative: false}",
    ]
    start_order = [p for p in [PARTS[1], PARTS[0], PARTS[2], PARTS[3]] if p in parts]
    for part in start_order:
        lines += [
            "      - name: %s" % part["start_outcome"],
            "        keywords: %s" % keyword_list(part["start_keywords"]),
            "        check: {variable: %s, equals: found}" % part["check"],
            "        updates: {user_initiative_message: known, %s: known%s}"
            % (
                part["variable"],
                ", %s: known" % part["check"] if part["check"] != part["variable"] else "",
            ),
        ]
        if part["check"] != part["variable"]:
            lines.append("        values: {%s: reported}" % part["variable"])
    lines += [
        "      - name: fallback",
        "        fallback: true",
        "        updates: {user_initiative_message: known}",
        "        followup: start_conversation",
        "",
    ]
    return "\n".join(lines)


def main() -> None:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("src/dialplan/fixtures")
    outdir.mkdir(parents=True, exist_ok=True)
    for n in range(1, 5):
        path = outdir / f"car_inspection_{n}.yaml"
        path.write_text(generate(n), encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
