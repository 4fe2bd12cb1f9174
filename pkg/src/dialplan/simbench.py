"""Determination-latency simulation over effect trees.

Each trial draws one LogNormal(0,1) determiner time per oneof node and one
uniformly random outcome (sampled top-down), then evaluates four strategies
analytically on the same draws:

  parallel-flat    max over every oneof time in the tree
  sequential-flat  sum over every oneof time in the tree
  parallel-nested  leaf 0; oneof own time + selected child; and max of children
  sequential-nested same, but and sums its children

Times are computed from the recursion rather than real thread scheduling,
so the comparison is free of scheduler noise. Trial RNG streams derive from
(seed, trial index), which makes parallel and serial runs produce identical
datasets.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DialplanError
from .pddl import AND, LEAF, ONEOF, EffectNode, iter_nodes, leaf, oneof, and_

STRATEGIES = ("parallel-nested", "parallel-flat", "sequential-nested", "sequential-flat")


@dataclass(frozen=True, slots=True)
class SimTrial:
    tree_id: str
    seed: int
    times: dict  # oneof node id -> determiner seconds
    outcome: dict  # oneof node id -> selected child index (reached oneofs only)


def oneof_ids(tree: EffectNode) -> list[str]:
    return [node_id for node_id, node in iter_nodes(tree) if node.kind == ONEOF]


def sample_trial(tree: EffectNode, tree_id: str, seed: int, trial: int) -> SimTrial:
    """One time draw per oneof plus a top-down uniform outcome sample."""
    rng = np.random.default_rng((seed, trial))
    ids = oneof_ids(tree)
    draws = rng.lognormal(mean=0.0, sigma=1.0, size=len(ids)) if ids else []
    times = {node_id: float(t) for node_id, t in zip(ids, draws)}

    outcome: dict[str, int] = {}

    def pick(node: EffectNode, node_id: str) -> None:
        if node.kind == LEAF:
            return
        if node.kind == AND:
            for i, child in enumerate(node.children):
                pick(child, f"{node_id}.{i}")
            return
        index = int(rng.integers(len(node.children)))
        outcome[node_id] = index
        pick(node.children[index], f"{node_id}.{index}")

    pick(tree, "e")
    return SimTrial(tree_id, seed, times, outcome)


def strategy_time(kind: str, tree: EffectNode, times: dict, outcome: dict) -> float:
    """Total determination time of one strategy for one sampled trial."""
    if kind == "parallel-flat":
        return max(times.values(), default=0.0)
    if kind == "sequential-flat":
        return sum(times.values())
    if kind not in ("parallel-nested", "sequential-nested"):
        raise DialplanError(f"unknown strategy {kind!r}")
    combine = max if kind == "parallel-nested" else sum

    def walk(node: EffectNode, node_id: str) -> float:
        if node.kind == LEAF:
            return 0.0
        if node.kind == AND:
            children = [
                walk(child, f"{node_id}.{i}") for i, child in enumerate(node.children)
            ]
            return combine(children) if children else 0.0
        if node_id not in times:
            raise DialplanError(f"no determiner time for oneof {node_id!r}")
        if node_id not in outcome:
            raise DialplanError(f"no outcome selection for oneof {node_id!r}")
        index = outcome[node_id]
        return times[node_id] + walk(node.children[index], f"{node_id}.{index}")

    return walk(tree, "e")


@dataclass(slots=True)
class BenchResult:
    tree_id: str
    seed: int
    trials: int
    samples: dict  # strategy -> np.ndarray of times

    def log_samples(self, strategy: str) -> np.ndarray:
        return np.log(self.samples[strategy])

    def histogram(self, bins: int = 100) -> dict:
        """Shared-range histogram of ln(t) per strategy."""
        logs = {s: self.log_samples(s) for s in STRATEGIES}
        finite = np.concatenate([v[np.isfinite(v)] for v in logs.values()])
        lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        if lo == hi:
            hi = lo + 1.0
        edges = np.linspace(lo, hi, bins + 1)
        return {
            "edges": edges,
            "counts": {s: np.histogram(v[np.isfinite(v)], bins=edges)[0] for s, v in logs.items()},
        }


def _nested_times(tree: EffectNode, times: dict, outcome: dict) -> tuple[float, float]:
    """(parallel-nested, sequential-nested) in one walk; matches strategy_time."""

    def walk(node: EffectNode, node_id: str) -> tuple[float, float]:
        if node.kind == LEAF:
            return 0.0, 0.0
        if node.kind == AND:
            par, seq = 0.0, 0.0
            for i, child in enumerate(node.children):
                cpar, cseq = walk(child, f"{node_id}.{i}")
                par = max(par, cpar)
                seq += cseq
            return par, seq
        index = outcome[node_id]
        cpar, cseq = walk(node.children[index], f"{node_id}.{index}")
        t = times[node_id]
        return t + cpar, t + cseq

    return walk(tree, "e")


def run_bench(tree: EffectNode, tree_id: str, trials: int = 100_000, seed: int = 0) -> BenchResult:
    """Simulate ``trials`` determinations; all four strategies share each
    trial's times and outcome."""
    if trials < 1:
        raise DialplanError("need at least one trial")
    samples = {s: np.empty(trials) for s in STRATEGIES}
    for i in range(trials):
        trial = sample_trial(tree, tree_id, seed, i)
        values = trial.times.values()
        par_nested, seq_nested = _nested_times(tree, trial.times, trial.outcome)
        samples["parallel-nested"][i] = par_nested
        samples["sequential-nested"][i] = seq_nested
        samples["parallel-flat"][i] = max(values, default=0.0)
        samples["sequential-flat"][i] = sum(values)
    return BenchResult(tree_id, seed, trials, samples)


def write_bench_csv(result: BenchResult, outdir) -> list[str]:
    """Emit per-trial samples and the ln(t) histogram as CSV files."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    samples_path = outdir / f"{result.tree_id}_samples.csv"
    with open(samples_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["trial", *STRATEGIES])
        for i in range(result.trials):
            writer.writerow(
                [i] + [f"{result.samples[s][i]:.9g}" for s in STRATEGIES]
            )
    hist = result.histogram()
    hist_path = outdir / f"{result.tree_id}_log_histogram.csv"
    with open(hist_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_lo", "bin_hi", *STRATEGIES])
        edges = hist["edges"]
        for b in range(len(edges) - 1):
            writer.writerow(
                [f"{edges[b]:.6f}", f"{edges[b+1]:.6f}"]
                + [int(hist["counts"][s][b]) for s in STRATEGIES]
            )
    return [str(samples_path), str(hist_path)]


# ── tree fixtures (JSON serialization shared with controller tooling) ──


def tree_to_doc(node: EffectNode) -> dict:
    if node.kind == LEAF:
        doc: dict = {"kind": "leaf", "fluent": node.literal.fluent}
        if not node.literal.positive:
            doc["negated"] = True
    else:
        doc = {"kind": node.kind, "children": [tree_to_doc(c) for c in node.children]}
        if node.name is not None:
            doc["name"] = node.name
    if node.label is not None:
        doc["label"] = node.label
    return doc


def tree_from_doc(doc: dict) -> EffectNode:
    label = doc.get("label")
    if doc["kind"] == "leaf":
        node = leaf(doc["fluent"], not doc.get("negated", False))
    elif doc["kind"] == "and":
        node = and_([tree_from_doc(c) for c in doc.get("children", [])])
    elif doc["kind"] == "oneof":
        node = oneof([tree_from_doc(c) for c in doc["children"]], name=doc.get("name"))
    else:
        raise DialplanError(f"unknown tree node kind {doc['kind']!r}")
    if label is not None:
        return EffectNode(node.kind, node.literal, node.children, node.name, label)
    return node


def load_tree(path) -> EffectNode:
    with open(path, encoding="utf-8") as handle:
        return tree_from_doc(json.load(handle))


def save_tree(tree: EffectNode, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(tree_to_doc(tree), handle, indent=2)
        handle.write("\n")


def _chain(depth: int, index: int = 0) -> EffectNode:
    if depth == 0:
        return leaf(f"done_{index}")
    return oneof([leaf(f"stop_{index}"), _chain(depth - 1, index + 1)])


def benchmark_tree(shape: str) -> EffectNode:
    """The three benchmark shapes: general complex, flat, and deep chain.

    The general shape mixes parallel breadth with nested oneofs that are
    reached only on some outcomes, so the nested strategies regularly skip
    whole subtrees; the flat shape is one level of parallelizable
    determiners; the chain is pure oneof nesting.
    """
    if shape == "general":
        return and_([
            leaf("task_started"),
            oneof([leaf("auth_token"), leaf("auth_password"), leaf("auth_sso")]),
            oneof([
                leaf("profile_cached"),
                leaf("profile_fresh"),
                and_([leaf("profile_stale"),
                      oneof([leaf("refresh_ok"), leaf("refresh_failed")])]),
            ]),
            oneof([
                leaf("lookup_local"),
                and_([leaf("lookup_remote"),
                      oneof([leaf("remote_fast"), leaf("remote_slow"), leaf("remote_retry")])]),
            ]),
            oneof([leaf(f"probe_{i}") for i in range(4)]),
            oneof([
                leaf("notify_skipped"),
                leaf("notify_push"),
                and_([
                    leaf("notify_email"),
                    oneof([
                        leaf("email_sent"),
                        and_([leaf("email_deferred"),
                              oneof([leaf("retry_queued"), leaf("retry_dropped")])]),
                    ]),
                ]),
            ]),
        ])
    if shape == "flat":
        return and_([
            oneof([leaf(f"probe_{i}_low"), leaf(f"probe_{i}_mid"), leaf(f"probe_{i}_high")])
            for i in range(6)
        ])
    if shape == "chain":
        return _chain(6)
    raise DialplanError(f"unknown benchmark shape {shape!r}")
