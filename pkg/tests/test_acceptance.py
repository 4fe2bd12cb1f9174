"""Acceptance criteria, one test per criterion.

Each test prints a single ``ACCEPTANCE <name>: PASS`` line when it holds;
tolerances and runtime budgets are pinned here and nowhere else.
"""

from __future__ import annotations

import random
import time

import numpy as np
import pytest

from dialplan import pddl
from dialplan.agentspec import load_spec_file
from dialplan.compiler import compile_spec
from dialplan.determiners import Counting, Scripted
from dialplan.effects import enumerate_realizations, realization_count, resolve
from dialplan.executor import (
    ExecutionSession,
    check_alignment,
    determine,
    replay,
)
from dialplan.planner import solve, validate_plan
from dialplan.simbench import STRATEGIES, benchmark_tree, run_bench

from conftest import DATA, FIXTURES
from oracle import oracle_solvable, random_instance
from test_compiler import outcome_literal_sets
from test_executor import INSPECTION_REPLIES, drive_inspection

SIM_TRIALS = 100_000
SIM_SEED = 20260811


def report(name: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS")


def test_golden_compilation():
    """Compiled 4-part inspection agent equals the reference PDDL exactly
    (set equality on every compared component, zero tolerance, < 1 s)."""
    started = time.perf_counter()
    reference_domain = pddl.parse_domain((DATA / "car_inspection.domain.pddl").read_text())
    reference_problem = pddl.parse_problem(
        (DATA / "car_inspection.problem.pddl").read_text(), reference_domain
    )
    compiled = compile_spec(load_spec_file(FIXTURES / "car_inspection_4.yaml"))

    assert set(compiled.domain.predicates) == set(reference_domain.predicates)
    assert len(reference_domain.predicates) == 24
    assert {a.name for a in compiled.domain.actions} == {
        a.name for a in reference_domain.actions
    }
    assert len(reference_domain.actions) == 7
    for reference in reference_domain.actions:
        mine = compiled.domain.action(reference.name)
        assert set(mine.precondition) == set(reference.precondition), reference.name
        want = outcome_literal_sets(reference)
        got = outcome_literal_sets(mine)
        assert set(got) == set(want), reference.name
        for label in want:
            assert got[label] == want[label], (reference.name, label)
    assert set(compiled.problem.init) == set(reference_problem.init)
    assert len(reference_problem.init) == 9
    assert set(compiled.problem.goal) == {"GOAL"} == set(reference_problem.goal)
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"golden compilation took {elapsed:.2f}s"
    report("golden-compilation")


def test_scale_up_harness():
    """1..4 part agents: specification sizes match the published table
    (variables 5,6,7,8; actions 4,5,6,7), every instance solves to a valid
    controller in < 5 s, node counts nondecreasing. Published node/edge
    counts are planner-specific reference data and are not asserted."""
    expected_variables = {1: 5, 2: 6, 3: 7, 4: 8}
    expected_actions = {1: 4, 2: 5, 3: 6, 4: 7}
    node_counts = []
    for parts in (1, 2, 3, 4):
        spec = load_spec_file(FIXTURES / f"car_inspection_{parts}.yaml")
        assert len(spec.variables) == expected_variables[parts], parts
        assert len(spec.actions) == expected_actions[parts], parts
        compiled = compile_spec(spec)
        started = time.perf_counter()
        controller = solve(compiled.domain, compiled.problem)
        elapsed = time.perf_counter() - started
        assert controller is not None, f"{parts} parts unsolvable"
        assert elapsed < 5.0, f"{parts} parts took {elapsed:.2f}s"
        verdict = validate_plan(compiled.domain, compiled.problem, controller)
        assert verdict.valid, (parts, verdict.failures)
        node_counts.append(len(controller.states))
    assert node_counts == sorted(node_counts), node_counts
    report("scale-up-harness")


def test_planner_soundness():
    """500 random small instances (<=6 fluents, <=5 actions, <=3 outcomes):
    solve's verdict matches the independent oracle and every controller
    validates. Zero mismatches, < 60 s total."""
    started = time.perf_counter()
    rng = random.Random(424242)
    solvable = 0
    for i in range(500):
        domain, problem = random_instance(rng)
        controller = solve(domain, problem, max_states=50_000)
        expected = oracle_solvable(domain, problem)
        assert (controller is not None) == expected, f"verdict mismatch on instance {i}"
        if controller is not None:
            solvable += 1
            verdict = validate_plan(domain, problem, controller)
            assert verdict.valid, (i, verdict.failures)
    elapsed = time.perf_counter() - started
    assert elapsed < 60.0, f"soundness sweep took {elapsed:.1f}s"
    assert 0 < solvable < 500  # both verdicts exercised
    report(f"planner-soundness ({solvable}/500 solvable, {elapsed:.1f}s)")


def test_realization_algebra():
    """200 random effect trees (depth <= 4): enumeration count matches the
    leaf/product/sum recursion and scripted determination reproduces
    resolve()'s add/del sets elementwise. Zero mismatches."""
    from test_effects import effect_trees

    from hypothesis import given, settings

    checked = []

    @settings(max_examples=200, deadline=None)
    @given(effect_trees(max_depth=4))
    def run(tree):
        realizations = enumerate_realizations(tree)
        assert len(realizations) == realization_count(tree)
        for realization in realizations:
            assert resolve(tree, dict(realization.choices)) == realization
            registry = {
                key: Scripted([f"o{index}"]) for key, index in realization.choices
            }
            result = determine(tree, registry, None, {})
            assert result.realization.adds == realization.adds
            assert result.realization.dels == realization.dels
            assert dict(result.realization.choices) == dict(realization.choices)
        checked.append(len(realizations))

    run()
    assert len(checked) >= 200
    report(f"realization-algebra ({len(checked)} trees)")


@pytest.fixture(scope="module")
def sim_results():
    started = time.perf_counter()
    results = {
        shape: run_bench(benchmark_tree(shape), shape, trials=SIM_TRIALS, seed=SIM_SEED)
        for shape in ("flat", "chain", "general")
    }
    return results, time.perf_counter() - started


def test_simulation_study(sim_results):
    """100,000 trials per fixture tree, LogNormal(0,1) determiner times,
    uniform outcomes, fixed seed; (a) flat: parallel pair and sequential
    pair identical elementwise; (b) chain: both nested strategies identical
    elementwise; (c) general: mean(parallel-nested) < mean(parallel-flat) <
    mean(sequential-flat); (d) per-trial dominance in 100% of trials.
    Total runtime < 30 s."""
    results, elapsed = sim_results
    flat, chain, general = results["flat"], results["chain"], results["general"]
    assert np.array_equal(
        flat.samples["parallel-flat"], flat.samples["parallel-nested"]
    ), "(a) parallel strategies differ on the flat tree"
    assert np.array_equal(
        flat.samples["sequential-flat"], flat.samples["sequential-nested"]
    ), "(a) sequential strategies differ on the flat tree"
    assert np.array_equal(
        chain.samples["sequential-nested"], chain.samples["parallel-nested"]
    ), "(b) nested strategies differ on the chain tree"
    means = {s: float(np.mean(general.samples[s])) for s in STRATEGIES}
    assert means["parallel-nested"] < means["parallel-flat"], "(c) nested not faster"
    assert means["parallel-flat"] < means["sequential-flat"], "(c) parallel not faster"
    for result in results.values():
        s = result.samples
        assert np.all(s["sequential-flat"] >= s["parallel-flat"]), "(d)"
        assert np.all(s["sequential-nested"] >= s["parallel-nested"]), "(d)"
    assert elapsed < 30.0, f"simulation took {elapsed:.1f}s"
    report(
        "simulation-study "
        f"(n={SIM_TRIALS}, mean par-nested {means['parallel-nested']:.3f} "
        f"< par-flat {means['parallel-flat']:.3f}, {elapsed:.1f}s)"
    )


@pytest.fixture(scope="module")
def end_to_end(car_compiled, car_controller):
    """Scripted conversation with invariant checks and counting determiners."""
    from dialplan.determiners import registry_from_manifest

    registry = {
        key: Counting(fn)
        for key, fn in registry_from_manifest(car_compiled.manifest.determiners).items()
    }
    session = ExecutionSession(
        car_compiled.domain, car_compiled.problem, car_controller,
        car_compiled.manifest, registry=registry,
    )
    replies = {k: list(v) for k, v in INSPECTION_REPLIES.items()}
    steps = 0
    while not session.done:
        steps += 1
        assert steps < 40
        action = session.current_action()
        assert action.applicable(session.snapshot.state), "precondition invariant"
        if session.awaiting_input:
            queue = replies.get(action.name)
            session.step(queue.pop(0) if queue else "hmm")
        else:
            session.step()
        check_alignment(session.snapshot, car_compiled.manifest.variables)
    return session, registry


def test_end_to_end_execution(car_compiled, car_controller, end_to_end):
    """A scripted conversation drives the inspection controller from init to
    GOAL, covering an initiative switch and a fallback outcome; alignment
    and precondition invariants hold after every step; replay of the trace
    reports zero divergences."""
    session, _registry = end_to_end
    assert "GOAL" in session.snapshot.state
    edges = [entry.edge for entry in session.snapshot.history]
    assert any("initiative-switch" in edge for edge in edges), "no initiative switch"
    assert any("fallback" in edge for edge in edges), "no fallback outcome"
    report_obj = replay(
        car_compiled.domain, car_compiled.problem, car_controller,
        car_compiled.manifest, session.trace.records,
    )
    assert report_obj.consistent and report_obj.divergences == []
    report(
        f"end-to-end-execution ({session.snapshot.step} steps, replay clean)"
    )


def test_determination_laziness(end_to_end):
    """Counting determiners under oneof children that were never selected
    record zero invocations, both across the conversation (each top-level
    determiner fires only when its action runs) and through a nested effect
    where an unselected branch hides an inner determiner."""
    session, registry = end_to_end
    runs_per_action = {}
    for entry in session.snapshot.history:
        runs_per_action[entry.action] = runs_per_action.get(entry.action, 0) + 1
    for action_name, binding in session.manifest.actions.items():
        resolve_key = f"resolve-{binding['short_name']}"
        expected = runs_per_action.get(action_name, 0)
        assert registry[resolve_key].calls == expected, resolve_key

    from test_executor import TestNestedEffectSession

    domain, problem, controller, manifest = TestNestedEffectSession().build()
    inner = Counting(Scripted(["o0"] * 4))
    nested_registry = {
        "e.1": Scripted(["o0"] * 4),
        "e.2": Scripted(["o0"] * 4),  # never opens the branch holding e.2.1.1
        "e.2.1.1": inner,
    }
    nested = ExecutionSession(domain, problem, controller, manifest, registry=nested_registry)
    nested.run_auto()
    assert nested.done
    assert inner.calls == 0, "determiner under a non-selected child was invoked"
    report("determination-laziness")
