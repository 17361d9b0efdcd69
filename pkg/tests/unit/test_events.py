"""Tests for unfolding transition systems into event structures."""

import itertools

import pytest

from apitc.errors import PesError
from apitc.events import (
    Event,
    Pes,
    check_coherence,
    enumerate_pomset_transitions,
    pes_configurations,
    pomsets_isomorphic,
    unfold_to_pes,
)
from apitc.lts import Bounds, build_lts
from apitc.parser import parse


def unfold(source, depth=4):
    lts = build_lts(parse(source), {}, Bounds(max_depth=depth))
    return lts, unfold_to_pes(lts, depth)


class TestUnfold:
    """Tests for unfold_to_pes."""

    def test_sequential_steps_are_causal(self):
        """A prefix causes what follows it."""
        _, unfolding = unfold("tau.a!b")
        pes = unfolding.pes
        assert len(pes.events) == 2
        assert pes.label(0).is_tau
        assert str(pes.label(1)) == "a!b"
        assert pes.leq(0, 1)
        assert not pes.concurrent(0, 1)
        assert not pes.conflicts
        assert not unfolding.truncated

    def test_alternative_inputs_conflict(self):
        """Different inputs of one actor exclude each other."""
        lts, unfolding = unfold("a?(x).0")
        pes = unfolding.pes
        assert len(pes.events) == len(lts.successors(lts.root))
        for a, b in itertools.combinations(pes.events, 2):
            assert pes.in_conflict(a, b)

    @pytest.mark.parametrize(
        "source", ["tau.a!b", "a?(x).0", "x!y | x?(v).v!v", "x!y | u?(v).0", "tau.case c of {c: 0, c: a!c}"]
    )
    def test_axioms_hold(self, source):
        """Unfoldings satisfy the event-structure axioms."""
        _, unfolding = unfold(source)
        assert unfolding.pes.check_axioms() == []

    def test_configurations_reach_states(self):
        """Every explored configuration is a configuration of the structure."""
        _, unfolding = unfold("x!y | x?(v).v!v")
        for c in unfolding.state_of:
            assert unfolding.pes.is_configuration(c)

    def test_step_actions_are_concurrent_events(self):
        """A joint step becomes one event per action, pairwise concurrent."""
        lts, unfolding = unfold("x!y | u?(v).0")
        pes = unfolding.pes
        assert all(len(label) == 2 for label, _ in lts.successors(lts.root))
        outputs = [e for e in pes.events if str(pes.label(e)) == "x!y"]
        (received,) = [e for e in pes.events if str(pes.label(e)) == "u?y"]
        assert len(outputs) == 1
        assert pes.concurrent(outputs[0], received)
        assert frozenset({outputs[0], received}) in unfolding.state_of

    def test_partial_step_is_a_configuration_without_state(self):
        """Half of a joint step is a configuration that no state is mapped to."""
        _, unfolding = unfold("x!y | u?(v).0")
        (output,) = [e for e in unfolding.pes.events if str(unfolding.pes.label(e)) == "x!y"]
        assert unfolding.pes.is_configuration(frozenset({output}))
        assert frozenset({output}) not in unfolding.state_of

    def test_branches_conflict(self):
        """Two internal branches of one choice exclude each other."""
        _, unfolding = unfold("case u of {u: a!b, u: c!d}")
        pes = unfolding.pes
        first = [e for e, ev in pes.events.items() if not ev.causes]
        assert len(first) == 2
        assert all(pes.label(e).is_tau for e in first)
        assert pes.in_conflict(*first)

    def test_branches_to_different_states_stay_apart(self):
        """Equal labels after the same causes are separate events when their targets differ."""
        lts, unfolding = unfold("tau.case c of {c: 0, c: a!c}")
        pes = unfolding.pes
        assert sorted(str(lab) for _, lab, _ in lts.edges()) == ["a!c", "tau", "tau", "tau"]
        assert sorted(str(pes.label(e)) for e in pes.events) == ["a!c", "tau", "tau", "tau"]
        assert pes.in_conflict(1, 2)
        assert check_coherence(unfolding, lts) == []

    @pytest.mark.parametrize(
        "source", ["tau.a!b", "a?(x).0", "x!y | x?(v).v!v", "x!y | u?(v).0", "case u of {u: a!b, u: c!d}"]
    )
    def test_configurations_replay(self, source):
        """Replaying an explored configuration step by step reaches its state."""
        lts, unfolding = unfold(source)
        assert check_coherence(unfolding, lts) == []

    def test_replay_detects_a_wrong_state(self):
        """A configuration mapped to the wrong state is reported."""
        lts, unfolding = unfold("tau.a!b")
        unfolding.state_of[frozenset({0})] = lts.root
        assert check_coherence(unfolding, lts) == ["configuration [0] does not reach state 0"]

    def test_depth_truncates(self):
        """Stopping before the end marks the unfolding as truncated."""
        _, unfolding = unfold("tau.a!b", depth=1)
        assert len(unfolding.pes.events) == 1
        assert unfolding.truncated

    def test_json(self):
        """The JSON form lists events, conflicts and configurations."""
        _, unfolding = unfold("tau.a!b")
        data = unfolding.to_json()
        assert set(data) == {"events", "conflicts", "configurations", "truncated"}
        assert [c["events"] for c in data["configurations"]] == [[], [0], [0, 1]]


class TestPes:
    """Tests for the Pes helpers."""

    def test_enabled_respects_conflict(self):
        """An event in conflict with the configuration is not enabled."""
        _, unfolding = unfold("a?(x).0")
        pes = unfolding.pes
        assert pes.enabled(frozenset({0})) == []
        assert len(pes.enabled(frozenset())) == len(pes.events)

    def test_configurations(self):
        """Pairwise conflicting events give only singleton configurations."""
        _, unfolding = unfold("a?(x).0")
        configs = pes_configurations(unfolding.pes)
        assert configs[0] == frozenset()
        assert len(configs) == len(unfolding.pes.events) + 1

    def test_not_downward_closed(self):
        """A configuration must contain the causes of its events."""
        _, unfolding = unfold("tau.a!b")
        assert not unfolding.pes.is_configuration(frozenset({1}))

    def test_axiom_violations_reported(self):
        """A conflict not inherited along causality is reported."""
        pes = Pes()
        _, unfolding = unfold("tau.a!b")
        label = unfolding.pes.label(1)
        pes.events = {
            0: Event(0, label, frozenset(), 0),
            1: Event(1, label, frozenset(), 1),
            2: Event(2, label, frozenset({0}), 2),
        }
        pes.conflicts = {frozenset({0, 1})}
        assert any("not inherited" in p for p in pes.check_axioms())


class TestPomsets:
    """Tests for pomset transitions and isomorphism."""

    def test_pomset_transitions(self):
        """Pomset moves may contain causally related events."""
        _, unfolding = unfold("tau.a!b")
        moves = [x for x, _ in enumerate_pomset_transitions(unfolding.pes, frozenset())]
        assert sorted(moves, key=len) == [frozenset({0}), frozenset({0, 1})]

    def test_step_transitions(self):
        """Step moves contain only concurrent events."""
        _, unfolding = unfold("tau.a!b")
        moves = [x for x, _ in enumerate_pomset_transitions(unfolding.pes, frozenset(), step_only=True)]
        assert moves == [frozenset({0})]

    def test_isomorphism(self):
        """Pomsets compare by labels and order, with tau hidden on request."""
        _, one = unfold("tau.a!b")
        _, two = unfold("a!b")
        both = frozenset({0, 1})
        assert pomsets_isomorphic(one.pes, both, one.pes, both)
        assert not pomsets_isomorphic(one.pes, both, two.pes, frozenset({0}))
        assert pomsets_isomorphic(one.pes, both, two.pes, frozenset({0}), visible_only=True)

    def test_rejects_non_configuration(self):
        """Moves are only enumerated from configurations."""
        _, unfolding = unfold("tau.a!b")
        with pytest.raises(PesError):
            list(enumerate_pomset_transitions(unfolding.pes, frozenset({1})))
