"""Command-line entry point tying the pipeline together.

Artifacts are plain files in user-named directories; an agent bundle is a
directory holding domain.pddl, problem.pddl, manifest.json, and (after
planning) controller.json. Failures exit nonzero with a JSON diagnostic on
stderr.
"""

from __future__ import annotations

import argparse
import csv
import importlib.resources
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import pddl
from .agentspec import load_spec_file, spec_to_doc, validate
from .compiler import ExecutionManifest, compile_spec
from .errors import DialplanError
from .executor import ExecutionSession, TraceLog, replay as replay_trace
from .planner import Controller, solve, validate_plan
from .simbench import load_tree, run_bench, write_bench_csv

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSOLVABLE = 2
EXIT_INVALID = 3

REFERENCE_SCALE_UP = {
    # published controller sizes for the inspection family; planner-specific,
    # reported for orientation and never asserted
    1: (7, 14), 2: (15, 44), 3: (31, 114), 4: (63, 272),
}


def fixture_path(name: str) -> Path:
    return Path(importlib.resources.files("dialplan")) / "fixtures" / name


def fail(message: str, code: int = EXIT_ERROR, **detail) -> int:
    sys.stderr.write(json.dumps({"error": message, **detail}) + "\n")
    return code


class Bundle:
    """On-disk compiled agent."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.domain = pddl.parse_domain((self.root / "domain.pddl").read_text())
        self.problem = pddl.parse_problem(
            (self.root / "problem.pddl").read_text(), self.domain
        )
        self.manifest = ExecutionManifest.from_json(
            (self.root / "manifest.json").read_text()
        )
        controller_path = self.root / "controller.json"
        self.controller = (
            Controller.from_json(controller_path.read_text())
            if controller_path.exists()
            else None
        )


def cmd_validate(args) -> int:
    spec = load_spec_file(args.spec)
    diagnostics = validate(spec)
    for diag in diagnostics:
        print(diag)
    errors = [d for d in diagnostics if d.severity == "error"]
    if errors:
        return fail("specification has errors", EXIT_INVALID, count=len(errors))
    print(f"ok: {spec.name} ({len(spec.variables)} variables, {len(spec.actions)} actions)")
    return EXIT_OK


def cmd_compile(args) -> int:
    spec = load_spec_file(args.spec)
    compiled = compile_spec(spec)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "domain.pddl").write_text(pddl.print_domain(compiled.domain))
    (outdir / "problem.pddl").write_text(pddl.print_problem(compiled.problem))
    (outdir / "manifest.json").write_text(compiled.manifest.to_json())
    (outdir / "spec.json").write_text(json.dumps(spec_to_doc(spec), indent=2) + "\n")
    print(f"compiled {spec.name}: {len(compiled.domain.predicates)} predicates, "
          f"{len(compiled.domain.actions)} actions -> {outdir}")
    return EXIT_OK


def cmd_plan(args) -> int:
    if args.bundle:
        root = Path(args.bundle)
        domain = pddl.parse_domain((root / "domain.pddl").read_text())
        problem = pddl.parse_problem((root / "problem.pddl").read_text(), domain)
        out = root / "controller.json"
    else:
        domain = pddl.parse_domain(Path(args.domain).read_text())
        problem = pddl.parse_problem(Path(args.problem).read_text(), domain)
        out = Path(args.out or "controller.json")
    started = time.perf_counter()
    controller = solve(domain, problem, max_states=args.max_states)
    elapsed = time.perf_counter() - started
    if controller is None:
        return fail("unsolvable: no strong-cyclic controller exists", EXIT_UNSOLVABLE)
    out.write_text(controller.to_json(agent=domain.name))
    print(json.dumps({
        "nodes": len(controller.states),
        "edges": len(controller.edges),
        "goal_nodes": len(controller.goal_nodes),
        "solve_seconds_wall_clock": round(elapsed, 6),
        "controller": str(out),
    }))
    return EXIT_OK


def cmd_check_plan(args) -> int:
    bundle = Bundle(args.bundle)
    if bundle.controller is None:
        return fail("bundle has no controller.json; run `dialplan plan` first")
    verdict = validate_plan(bundle.domain, bundle.problem, bundle.controller)
    if verdict.valid:
        print(f"valid: {verdict.visited} reachable (state, node) pairs checked")
        return EXIT_OK
    for failure in verdict.failures:
        print(f"invalid: {failure}")
    return fail("controller failed validation", EXIT_INVALID, failures=verdict.failures)


def _session(bundle: Bundle, trace_path: str | None) -> ExecutionSession:
    if bundle.controller is None:
        raise DialplanError("bundle has no controller.json; run `dialplan plan` first")
    trace = TraceLog(trace_path) if trace_path else TraceLog()
    return ExecutionSession(
        bundle.domain, bundle.problem, bundle.controller, bundle.manifest, trace=trace
    )


def cmd_chat(args) -> int:
    bundle = Bundle(args.bundle)
    session = _session(bundle, args.trace)
    script = None
    if args.script:
        script = [line.rstrip("\n") for line in Path(args.script).read_text().splitlines()]
    turns = 0
    while not session.done:
        for record in session.run_auto():
            for line in record.utterances:
                print(line)
        if session.done:
            break
        print(f"agent: {session.prompt()}")
        if script is not None:
            if not script:
                return fail("script ran out of replies before the goal", EXIT_ERROR)
            reply = script.pop(0)
            print(f"user: {reply}")
        else:
            try:
                reply = input("user: ")
            except EOFError:
                print()
                return fail("conversation aborted", EXIT_ERROR)
        session.step(reply)
        turns += 1
        if turns > args.max_turns:
            return fail(f"no goal after {turns} turns", EXIT_ERROR)
    print(f"conversation complete in {session.snapshot.step} steps")
    return EXIT_OK


def cmd_replay(args) -> int:
    bundle = Bundle(args.bundle)
    if bundle.controller is None:
        return fail("bundle has no controller.json; run `dialplan plan` first")
    records = TraceLog.load(args.trace)
    report = replay_trace(
        bundle.domain, bundle.problem, bundle.controller, bundle.manifest, records
    )
    if report.consistent:
        print(f"consistent: {len(records)} steps, zero divergences")
        return EXIT_OK
    for divergence in report.divergences:
        print(f"divergence: {divergence}")
    return fail("trace diverges from the controller", EXIT_INVALID,
                divergences=report.divergences)


def cmd_bench(args) -> int:
    named = {"general": "general_complex.json", "flat": "flat.json", "chain": "deep_chain.json"}
    if args.tree in named:
        path = fixture_path("trees") / named[args.tree]
        tree_id = args.tree
    else:
        path = Path(args.tree)
        tree_id = path.stem
    tree = load_tree(path)
    result = run_bench(tree, tree_id, trials=args.trials, seed=args.seed)
    files = write_bench_csv(result, args.out)
    summary = {
        "tree": tree_id,
        "trials": args.trials,
        "seed": args.seed,
        "mean_seconds": {
            strategy: round(float(np.mean(samples)), 6)
            for strategy, samples in result.samples.items()
        },
        "files": files,
    }
    print(json.dumps(summary, indent=2))
    return EXIT_OK


def cmd_scale_up(args) -> int:
    rows = []
    for parts in range(1, args.parts + 1):
        spec = load_spec_file(fixture_path(f"car_inspection_{parts}.yaml"))
        compiled = compile_spec(spec)
        started = time.perf_counter()
        controller = solve(compiled.domain, compiled.problem)
        elapsed = time.perf_counter() - started
        if controller is None:
            return fail(f"inspection agent with {parts} parts is unsolvable", EXIT_UNSOLVABLE)
        verdict = validate_plan(compiled.domain, compiled.problem, controller)
        if not verdict.valid:
            return fail(f"controller for {parts} parts failed validation", EXIT_INVALID,
                        failures=verdict.failures)
        ref_nodes, ref_edges = REFERENCE_SCALE_UP.get(parts, (None, None))
        rows.append({
            "parts": parts,
            "variables": len(spec.variables),
            "actions": len(spec.actions),
            "nodes": len(controller.states),
            "edges": len(controller.edges),
            "solve_seconds_wall_clock": round(elapsed, 6),
            "reference_nodes": ref_nodes,
            "reference_edges": ref_edges,
        })
    header = ["parts", "variables", "actions", "nodes", "edges",
              "solve_seconds_wall_clock", "reference_nodes", "reference_edges"]
    widths = [max(len(h), 10) for h in header]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("  ".join(str(row[h]).ljust(w) for h, w in zip(header, widths)))
    if args.out:
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        with open(outdir / "scale_up.csv", "w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=header)
            writer.writeheader()
            writer.writerows(rows)
        (outdir / "scale_up.json").write_text(json.dumps(rows, indent=2) + "\n")
        print(f"wrote {outdir}/scale_up.csv and scale_up.json")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .gateway import build_app

    bundle = Bundle(args.bundle)
    if bundle.controller is None:
        return fail("bundle has no controller.json; run `dialplan plan` first")
    app = build_app({bundle.manifest.agent: bundle})
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialplan",
        description="Compile declarative dialogue agents to non-deterministic "
        "planning problems, synthesize controllers, execute and inspect them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an agent spec")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="compile a spec to a bundle directory")
    p.add_argument("spec")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("plan", help="synthesize a controller")
    p.add_argument("bundle", nargs="?", help="bundle directory from `compile`")
    p.add_argument("--domain", help="explicit domain file (instead of a bundle)")
    p.add_argument("--problem", help="explicit problem file")
    p.add_argument("-o", "--out", help="controller output path (explicit mode)")
    p.add_argument("--max-states", type=int, default=200_000)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("check-plan", help="validate a controller independently")
    p.add_argument("bundle")
    p.set_defaults(func=cmd_check_plan)

    p = sub.add_parser("chat", help="run a terminal conversation")
    p.add_argument("bundle")
    p.add_argument("--script", help="file with one user reply per line")
    p.add_argument("--trace", help="write the trace log here")
    p.add_argument("--max-turns", type=int, default=200)
    p.set_defaults(func=cmd_chat)

    p = sub.add_parser("replay", help="re-execute a trace against the controller")
    p.add_argument("trace")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("bench", help="determination-latency simulation")
    p.add_argument("--tree", default="general",
                   help="general | flat | chain | path to a tree JSON file")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--out", default="bench_out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("scale-up", help="inspection-family scale-up report")
    p.add_argument("--parts", type=int, default=4, choices=range(1, 5))
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_scale_up)

    p = sub.add_parser("serve", help="start the diagnostic gateway")
    p.add_argument("bundle")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8470)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "plan" and not args.bundle and not (args.domain and args.problem):
        parser.error("plan needs a bundle directory or --domain and --problem")
    try:
        return args.func(args)
    except DialplanError as exc:
        return fail(str(exc))
    except FileNotFoundError as exc:
        return fail(f"missing file: {exc.filename}")


if __name__ == "__main__":
    sys.exit(main())
