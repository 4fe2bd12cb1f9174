from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from dialplan.effects import (
    Realization,
    apply_realization,
    enumerate_realizations,
    realization_count,
    resolve,
)
from dialplan.errors import ModelError
from dialplan.pddl import EffectNode, and_, leaf, oneof


def hotel_booking_tree() -> EffectNode:
    """Nested web-action effect: confirmation and account access vary
    independently; card validity only matters if the account is reachable."""
    return and_([
        leaf("attempted_hotel_booking"),
        oneof([
            leaf("hotel_booking_confirmed"),
            and_([leaf("hotel_booking_confirmed", False), leaf("hotel_booking_pending")]),
        ]),
        oneof([
            leaf("account_accessible", False),
            and_([
                leaf("account_accessible"),
                oneof([leaf("card_unknown", False), leaf("card_unknown")]),
            ]),
        ]),
    ])


class TestEnumerate:
    def test_hotel_tree_has_six_realizations(self):
        tree = hotel_booking_tree()
        realizations = enumerate_realizations(tree)
        # count recursion: 1 x (1+1) x (1 + 1x(1+1)) = 6
        assert realization_count(tree) == 6
        assert len(realizations) == 6

    def test_single_leaf(self):
        realizations = enumerate_realizations(leaf("f"))
        assert realizations == [Realization(frozenset({"f"}), frozenset(), ())]

    def test_binary_oneof_of_signs(self):
        realizations = enumerate_realizations(oneof([leaf("f"), leaf("f", False)]))
        assert [(set(r.adds), set(r.dels)) for r in realizations] == [
            ({"f"}, set()),
            (set(), {"f"}),
        ]

    def test_add_del_clash_is_a_model_error(self):
        tree = and_([leaf("f"), leaf("f", False)])
        with pytest.raises(ModelError, match="adds and deletes 'f' in action broken"):
            enumerate_realizations(tree, action_name="broken")

    def test_choice_maps_are_bijective_with_realizations(self):
        realizations = enumerate_realizations(hotel_booking_tree())
        assert len({r.choices for r in realizations}) == len(realizations)


class TestResolve:
    def test_confirmed_accessible_card_ok(self):
        tree = hotel_booking_tree()
        realization = resolve(tree, {"e.1": 0, "e.2": 1, "e.2.1.1": 1})
        assert realization.adds == {
            "attempted_hotel_booking",
            "hotel_booking_confirmed",
            "account_accessible",
            "card_unknown",
        }
        assert realization.dels == frozenset()

    def test_pending_inaccessible(self):
        tree = hotel_booking_tree()
        realization = resolve(tree, {"e.1": 1, "e.2": 0})
        assert realization.adds == {"attempted_hotel_booking", "hotel_booking_pending"}
        assert realization.dels == {"hotel_booking_confirmed", "account_accessible"}

    def test_negated_leaf_with_empty_choice(self):
        realization = resolve(leaf("p", False), {})
        assert realization.adds == frozenset()
        assert realization.dels == {"p"}

    def test_unused_choices_ignored(self):
        tree = hotel_booking_tree()
        # inner card oneof not reached when the account branch is closed
        realization = resolve(tree, {"e.1": 0, "e.2": 0, "e.2.1.1": 1})
        assert dict(realization.choices) == {"e.1": 0, "e.2": 0}

    def test_missing_choice_for_reachable_oneof(self):
        with pytest.raises(ModelError, match="no choice given"):
            resolve(hotel_booking_tree(), {"e.1": 0})


class TestApply:
    def test_formula(self):
        realization = Realization(frozenset({"c"}), frozenset({"a"}), ())
        assert apply_realization(frozenset({"a", "b"}), realization) == {"b", "c"}

    def test_identity(self):
        realization = Realization(frozenset(), frozenset(), ())
        assert apply_realization(frozenset(), realization) == frozenset()

    def test_initiative_switch_from_reference_init(self, golden_domain, golden_problem):
        action = golden_domain.action("dialogue-disambiguation-start_conversation")
        effect = action.effect
        index = next(
            i for i, child in enumerate(effect.children)
            if child.label == "start_conversation_initiative-switch__"
        )
        realization = resolve(effect, {"resolve-start_conversation": index})
        state = apply_realization(frozenset(golden_problem.init), realization)
        assert "STARTED" in state
        assert "user_initiative" not in state
        for fluent in golden_problem.init:
            if fluent.startswith("can-do_"):
                assert fluent in state


# ── randomized properties ─────────────────────────────────────────────


@st.composite
def effect_trees(draw, max_depth: int = 4):
    """Trees with per-fluent fixed signs, so add/del sets never clash."""
    pool = [f"g{i}" for i in range(8)]
    signs = {f: draw(st.booleans()) for f in pool}

    def build(depth: int):
        if depth == 0:
            fluent = draw(st.sampled_from(pool))
            return leaf(fluent, signs[fluent])
        kind = draw(st.sampled_from(["leaf", "and", "oneof"]))
        if kind == "leaf":
            fluent = draw(st.sampled_from(pool))
            return leaf(fluent, signs[fluent])
        width = draw(st.integers(1, 3))
        children = [build(depth - 1) for _ in range(width)]
        if kind == "and":
            return and_(children)
        return oneof(children)

    return build(draw(st.integers(1, max_depth)))


@settings(max_examples=120, deadline=None)
@given(effect_trees())
def test_enumeration_matches_count_recursion(tree):
    realizations = enumerate_realizations(tree)
    assert len(realizations) == realization_count(tree)


@settings(max_examples=120, deadline=None)
@given(effect_trees())
def test_each_realization_matches_resolve(tree):
    for realization in enumerate_realizations(tree):
        again = resolve(tree, dict(realization.choices))
        assert again == realization


@settings(max_examples=120, deadline=None)
@given(effect_trees(), st.sets(st.sampled_from([f"g{i}" for i in range(8)])))
def test_apply_is_idempotent_per_realization(tree, base):
    state = frozenset(base)
    for realization in enumerate_realizations(tree):
        once = apply_realization(state, realization)
        assert apply_realization(once, realization) == once
        assert realization.adds <= once
        assert not realization.dels & once


@settings(max_examples=80, deadline=None)
@given(effect_trees())
def test_label_stripping_preserves_realization_sets(tree):
    from dialplan.pddl import strip_labels

    original = {(r.adds, r.dels) for r in enumerate_realizations(tree)}
    stripped = {(r.adds, r.dels) for r in enumerate_realizations(strip_labels(tree))}
    assert original == stripped
