from __future__ import annotations

import csv

import numpy as np
import pytest

from dialplan.pddl import and_, leaf, oneof
from dialplan.simbench import (
    STRATEGIES,
    benchmark_tree,
    load_tree,
    oneof_ids,
    run_bench,
    sample_trial,
    save_tree,
    strategy_time,
    tree_from_doc,
    tree_to_doc,
    write_bench_csv,
)

from conftest import FIXTURES


class TestSampleTrial:
    def test_no_oneofs_no_draws(self):
        trial = sample_trial(and_([leaf("a"), leaf("b")]), "t", 1, 0)
        assert trial.times == {} and trial.outcome == {}

    def test_fixed_seed_reproduces_trial(self):
        tree = benchmark_tree("general")
        first = sample_trial(tree, "g", 42, 17)
        second = sample_trial(tree, "g", 42, 17)
        assert first.times == second.times
        assert first.outcome == second.outcome

    def test_different_trials_differ(self):
        tree = benchmark_tree("general")
        assert sample_trial(tree, "g", 42, 0).times != sample_trial(tree, "g", 42, 1).times

    def test_uniform_outcome_frequencies(self):
        # binary oneof: each child should land near one half
        rng = np.random.default_rng(11)
        draws = rng.integers(2, size=1_000_000)
        freq = float(np.mean(draws))
        assert abs(freq - 0.5) < 0.01
        # and through the actual sampler at a smaller scale
        tree = oneof([leaf("a"), leaf("b")])
        picks = [sample_trial(tree, "b", 3, i).outcome["e"] for i in range(4000)]
        assert abs(np.mean(picks) - 0.5) < 0.05

    def test_unreached_oneofs_have_times_but_no_selection(self):
        tree = oneof([leaf("stop"), oneof([leaf("x"), leaf("y")])])
        for i in range(20):
            trial = sample_trial(tree, "t", 5, i)
            assert set(trial.times) == {"e", "e.1"}
            if trial.outcome["e"] == 0:
                assert "e.1" not in trial.outcome


class TestStrategyTime:
    def test_two_parallel_oneofs(self):
        tree = and_([oneof([leaf("a")]), oneof([leaf("b")])])
        times = {"e.0": 2.0, "e.1": 3.0}
        outcome = {"e.0": 0, "e.1": 0}
        assert strategy_time("parallel-nested", tree, times, outcome) == 3.0
        assert strategy_time("sequential-nested", tree, times, outcome) == 5.0
        assert strategy_time("parallel-flat", tree, times, outcome) == 3.0
        assert strategy_time("sequential-flat", tree, times, outcome) == 5.0

    def test_nested_chain_waits_while_flat_does_not(self):
        tree = oneof([leaf("x"), oneof([leaf("y")])])
        times = {"e": 2.0, "e.1": 3.0}
        outcome = {"e": 1, "e.1": 0}
        assert strategy_time("parallel-nested", tree, times, outcome) == 5.0
        assert strategy_time("parallel-flat", tree, times, outcome) == 3.0
        assert strategy_time("sequential-nested", tree, times, outcome) == 5.0
        assert strategy_time("sequential-flat", tree, times, outcome) == 5.0

    def test_single_oneof_all_strategies_equal(self):
        tree = oneof([leaf("x"), leaf("y")])
        times = {"e": 1.0}
        for strategy in STRATEGIES:
            assert strategy_time(strategy, tree, times, {"e": 0}) == 1.0


class TestRunBench:
    def test_same_seed_same_dataset(self):
        tree = benchmark_tree("general")
        first = run_bench(tree, "g", trials=500, seed=9)
        second = run_bench(tree, "g", trials=500, seed=9)
        for strategy in STRATEGIES:
            assert np.array_equal(first.samples[strategy], second.samples[strategy])

    def test_flat_tree_parallel_and_sequential_coincide(self):
        result = run_bench(benchmark_tree("flat"), "flat", trials=2000, seed=1)
        assert np.array_equal(
            result.samples["parallel-flat"], result.samples["parallel-nested"]
        )
        assert np.array_equal(
            result.samples["sequential-flat"], result.samples["sequential-nested"]
        )

    def test_chain_tree_nested_strategies_coincide(self):
        result = run_bench(benchmark_tree("chain"), "chain", trials=2000, seed=1)
        assert np.array_equal(
            result.samples["sequential-nested"], result.samples["parallel-nested"]
        )

    def test_general_tree_mean_ordering(self):
        result = run_bench(benchmark_tree("general"), "general", trials=5000, seed=1)
        means = {s: float(np.mean(v)) for s, v in result.samples.items()}
        assert means["parallel-nested"] < means["parallel-flat"]
        assert means["parallel-flat"] < means["sequential-flat"]

    def test_per_trial_dominance(self):
        for shape in ("general", "flat", "chain"):
            result = run_bench(benchmark_tree(shape), shape, trials=1000, seed=2)
            s = result.samples
            assert np.all(s["sequential-flat"] >= s["parallel-flat"])
            assert np.all(s["sequential-nested"] >= s["parallel-nested"])
            # flat sums in preorder, nested groups along the tree; when every
            # oneof is reached the two sums differ only by float association
            assert np.all(s["sequential-flat"] >= s["sequential-nested"] - 1e-9)

    def test_nested_time_bounded_below_by_selected_path_max(self):
        tree = benchmark_tree("general")
        for i in range(200):
            trial = sample_trial(tree, "g", 13, i)
            nested = strategy_time("parallel-nested", tree, trial.times, trial.outcome)
            selected_max = max(
                (trial.times[node_id] for node_id in trial.outcome), default=0.0
            )
            assert nested >= selected_max - 1e-12

    def test_histogram_and_csv(self, tmp_path):
        result = run_bench(benchmark_tree("flat"), "flat", trials=300, seed=4)
        hist = result.histogram()
        assert len(hist["edges"]) == 101
        for strategy in STRATEGIES:
            assert int(hist["counts"][strategy].sum()) == 300
        files = write_bench_csv(result, tmp_path)
        with open(files[0]) as handle:
            rows = list(csv.reader(handle))
        assert rows[0] == ["trial", *STRATEGIES]
        assert len(rows) == 301


class TestTreeFixtures:
    @pytest.mark.parametrize(
        "filename,shape",
        [
            ("general_complex.json", "general"),
            ("flat.json", "flat"),
            ("deep_chain.json", "chain"),
        ],
    )
    def test_shipped_fixtures_match_builders(self, filename, shape):
        assert load_tree(FIXTURES / "trees" / filename) == benchmark_tree(shape)

    def test_round_trip(self, tmp_path):
        tree = benchmark_tree("general")
        assert tree_from_doc(tree_to_doc(tree)) == tree
        save_tree(tree, tmp_path / "t.json")
        assert load_tree(tmp_path / "t.json") == tree

    def test_chain_depth(self):
        from dialplan.pddl import iter_nodes

        tree = benchmark_tree("chain")
        depth = 0
        node = tree
        while node.kind == "oneof":
            depth += 1
            node = node.children[-1]
        assert depth >= 5
        assert not any(n.kind == "and" for _i, n in iter_nodes(tree))

    def test_flat_is_one_level_of_parallel_determiners(self):
        tree = benchmark_tree("flat")
        assert tree.kind == "and"
        for child in tree.children:
            assert child.kind == "oneof"
            assert all(g.kind == "leaf" for g in child.children)

    def test_general_has_three_levels_of_nesting(self):
        ids = oneof_ids(benchmark_tree("general"))
        # a oneof nested under two other oneofs shows up as a long path
        assert any(len(i.split(".")) >= 5 for i in ids)
