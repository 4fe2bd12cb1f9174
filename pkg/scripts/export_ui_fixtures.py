#!/usr/bin/env python3
"""Export gateway wire payloads as frontend test fixtures.

Runs a scripted inspection conversation against the real gateway app and
dumps every payload the frontend consumes. The conversation repeats the
opener fallback so one controller edge is traversed twice.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from fastapi.testclient import TestClient

from dialplan.agentspec import load_spec_file, spec_to_doc
from dialplan.compiler import compile_spec
from dialplan.gateway import AgentBundle, build_app
from dialplan.planner import solve

ROOT = Path(__file__).parent.parent
REPLIES = [
    "check the oil",
    "blorp fizz",
    "blorp fizz",          # same fallback self-loop edge, traversed twice
    "blorp fizz",
    "you take it from here",
    "found them, they look good",
    "found it, nice and tight",
    "found, looking fine",
]


def main() -> None:
    outdir = Path(sys.argv[1]) if len(sys.argv) > 1 else ROOT / "frontend" / "tests" / "fixtures"
    outdir.mkdir(parents=True, exist_ok=True)

    spec = load_spec_file(ROOT / "src" / "dialplan" / "fixtures" / "car_inspection_4.yaml")
    compiled = compile_spec(spec)
    controller = solve(compiled.domain, compiled.problem)
    bundle = AgentBundle(
        compiled.domain, compiled.problem, controller, compiled.manifest,
        spec_doc=spec_to_doc(spec),
    )
    client = TestClient(build_app({"car": bundle}))

    def dump(name: str, doc) -> None:
        (outdir / name).write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {outdir / name}")

    dump("agents.json", client.get("/agents").json())
    dump("graph.json", client.get("/agents/car/graph").json())

    live = client.post("/agents/car/sessions", json={"mode": "live"}).json()
    sid = live["session_id"]
    utterance_responses = []
    for text in REPLIES:
        response = client.post(f"/sessions/{sid}/utterance", json={"text": text}).json()
        utterance_responses.append({"text": text, "response": response})
        if response["done"]:
            break
    info = client.get(f"/sessions/{sid}").json()
    assert info["done"], "scripted conversation did not reach the goal"
    trace = client.get(f"/sessions/{sid}/trace").json()
    pairs = [(p["from"], p["edge"], p["to"]) for p in trace["path"]]
    repeated = {p for p in pairs if pairs.count(p) >= 2}
    assert repeated, "fixture conversation must traverse some edge twice"
    print(f"conversation: {len(pairs)} steps; repeated edges: {len(repeated)}")

    dump("live_session.json", live)
    dump("live_steps.json", utterance_responses)
    dump("trace.json", trace)

    trace_lines = "\n".join(
        json.dumps({k: p[k] for k in
                    ("step", "node", "action", "prior_state_hash", "edge",
                     "new_state", "context_delta", "utterances", "next_node")},
                   separators=(",", ":"))
        for p in (r["response"] for r in utterance_responses)
        for p in p["records"]
    )
    (outdir / "trace.jsonl").write_text(trace_lines + "\n")
    print(f"wrote {outdir / 'trace.jsonl'}")

    replay = client.post(
        "/agents/car/sessions", json={"mode": "replay", "trace": trace_lines}
    ).json()
    dump("replay_session.json", replay)
    steps = []
    for k in range(len(pairs) + 1):
        steps.append(client.get(f"/sessions/{replay['session_id']}/steps/{k}").json())
    dump("steps.json", steps)


if __name__ == "__main__":
    main()
