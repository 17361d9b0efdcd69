"""Tests for the step-labelled transition system."""

import pytest

from apitc.actions import TAU_STEP, ActionLabel, StepLabel
from apitc.errors import SemanticsError, TypingError
from apitc.lts import (
    Bounds,
    build_lts,
    check_subject_reduction,
    derive_transitions,
    step_transitions,
    weak_closure,
)
from apitc.parser import parse, parse_definitions
from apitc.syntax import NIL, Inst, Msg, Par


def labels(p, defs=None):
    return {label for label, _ in step_transitions(p, defs)}


class TestDeriveTransitions:
    """Tests for single-step derivations."""

    def test_output(self):
        """A message sends itself and disappears."""
        assert step_transitions(parse("a!b")) == {(StepLabel.of(ActionLabel.out("a", "b")), NIL)}

    def test_input_universe(self):
        """Inputs range over free names, the witness and a bound witness."""
        got = {str(label) for label in labels(parse("x?(v).v!v"))}
        assert got == {"x?x", "x?(w'0)", "x?w'0"}

    def test_universe_extra_names(self):
        """Extra universe names become input objects."""
        got = {str(label) for label, _ in step_transitions(parse("x?(v).0"), universe={"k"})}
        assert "x?k" in got

    def test_tau_and_case(self):
        """tau prefixes and matching case branches are silent moves."""
        assert step_transitions(parse("tau.a!b")) == {(TAU_STEP, Msg("a", "b"))}
        assert step_transitions(parse("case u of { u: a!b, v: 0 }")) == {(TAU_STEP, Msg("a", "b"))}
        assert step_transitions(parse("case u of { v: a!b }")) == set()

    def test_independent_components_move_together(self):
        """Two enabled components cannot move alone."""
        got = labels(parse("a!b | c!d"))
        assert got == {StepLabel.of(ActionLabel.out("a", "b"), ActionLabel.out("c", "d"))}

    def test_stuck_partner_lets_component_move(self):
        """A component moves alone when its partner is stuck."""
        (t,) = derive_transitions(parse("a!b | 0"))
        assert t.rule == "PAR1"
        assert str(t.label) == "a!b"

    def test_communication(self):
        """A message and a matching actor synchronise on a tau."""
        ts = derive_transitions(parse("x!y | x?(v).0"))
        com = [t for t in ts if t.rule == "COM"]
        assert len(com) == 1
        assert com[0].label == TAU_STEP
        assert com[0].emitted == (("x", "y"),)
        assert all(t.label.is_tau or len(t.label) == 2 for t in ts)

    def test_complementary_actions_never_share_a_step(self):
        """x!y and x?y cannot appear in one step."""
        got = {str(label) for label in labels(parse("x!y | x?(v).0"))}
        assert not any("x!y" in s and "x?y" in s for s in got)

    def test_restriction_blocks_private_channel(self):
        """A restricted actor cannot talk to the environment."""
        assert step_transitions(parse("nu x. x!a")) == set()

    def test_scope_extrusion(self):
        """Sending a restricted name opens its scope."""
        ((label, target),) = step_transitions(parse("nu x. a!x"))
        assert str(label) == "a!(e'0)"
        assert target == NIL

    def test_extrusion_independent_of_binder_name(self):
        """Alpha-variants extrude the same name."""
        assert step_transitions(parse("nu x. a!x.x?(u).0")) == step_transitions(parse("nu y. a!y.y?(u).0"))

    def test_close(self):
        """A bound output meeting a bound input closes the scope."""
        ts = derive_transitions(parse("nu x. a!x | a?(v).v!v"))
        assert any(t.rule == "CLOSE" for t in ts)

    def test_joint_prefix(self):
        """A joint prefix performs all of its atoms in one step."""
        got = {str(label) for label in labels(parse("(a!b & c?(d)).0"))}
        assert "{c?a, a!b}" in got
        assert len(got) == 5

    def test_behaviour_unfolds(self, diverge_defs):
        """Instances move as their unfolded body."""
        ts = derive_transitions(Inst("Diverge", ("x",)), diverge_defs)
        assert ts
        assert all(t.rule == "BEHV" for t in ts)

    def test_undefined_behaviour(self):
        """Unfolding an undefined behaviour is an error."""
        with pytest.raises(SemanticsError):
            derive_transitions(Inst("Nope", ("a",)), {})


class TestBuildLts:
    """Tests for bounded exploration."""

    def test_finite_system(self):
        """A terminating system is explored completely."""
        lts = build_lts(parse("x!y | x?(v).0"), {}, Bounds(max_depth=4))
        assert not lts.is_truncated
        assert len(lts.states) == 2
        assert lts.term(1) == Par(NIL, NIL)
        assert TAU_STEP in {label for label, _ in lts.successors(lts.root)}
        assert lts.targets(lts.root, TAU_STEP) == {1}

    def test_depth_truncation(self, diverge_defs):
        """Unbounded behaviour is cut at the depth limit."""
        lts = build_lts(parse("Diverge<x;> | x!u", diverge_defs), diverge_defs, Bounds(max_depth=2))
        assert lts.is_truncated

    def test_state_truncation(self, diverge_defs):
        """The state limit marks the states it cuts off."""
        lts = build_lts(parse("Diverge<x;> | x!u", diverge_defs), diverge_defs, Bounds(max_depth=6, max_states=3))
        assert len(lts.states) == 3
        assert lts.is_truncated

    def test_depth_one(self):
        """At depth 1 the root moves once and the successor is cut off."""
        lts = build_lts(parse("tau.a!b"), {}, Bounds(max_depth=1))
        assert lts.states == [0, 1]
        assert lts.truncated == {1}

    @pytest.mark.parametrize("bounds", [{"max_depth": 0}, {"max_states": 0}, {"max_depth": -1}])
    def test_bounds_must_be_positive(self, bounds):
        """Zero or negative bounds are rejected when the bounds are built."""
        with pytest.raises(ValueError, match="bounds must be positive"):
            Bounds(**bounds)

    def test_alpha_equivalent_states_shared(self):
        """States are canonical, so alpha-variants collapse."""
        lts = build_lts(parse("tau.x?(u).0 | tau.x?(v).0"), {}, Bounds(max_depth=2))
        assert len({lts.term(s) for s in lts.states}) == len(lts.states)

    def test_json_shape(self):
        """JSON edges carry src, action list and dst."""
        data = build_lts(parse("a!b"), {}, Bounds(max_depth=2)).to_json()
        assert data["states"][0] == {"id": 0, "term": "a!b"}
        assert data["edges"] == [
            {
                "src": 0,
                "label": [{"kind": "out", "subject": "a", "object": "b"}],
                "text": "a!b",
                "dst": 1,
            }
        ]
        assert data["truncated"] == []

    def test_dot(self):
        """DOT output has one node per state."""
        dot = build_lts(parse("a!b"), {}, Bounds(max_depth=2)).to_dot()
        assert "digraph" in dot
        assert "a!b" in dot

    def test_universe_cap(self):
        """Only the first universe_size extra names are used."""
        bounds = Bounds(universe_extra=("k", "l", "m"), universe_size=2)
        assert bounds.universe_for(parse("a!b")) == {"a", "b", "k", "l"}


class TestWeakClosure:
    """Tests for tau closure."""

    def test_weak_step_skips_taus(self):
        """A visible step may be preceded and followed by taus."""
        lts = build_lts(parse("tau.a!b.tau.0"), {}, Bounds(max_depth=4))
        closure = weak_closure(lts)
        out = StepLabel.of(ActionLabel.out("a", "b"))
        assert closure.tau_star[lts.root] == {0, 1}
        assert closure.after(lts.root, out) == {2, 3}
        assert lts.root in closure.after(lts.root, TAU_STEP)


class TestSubjectReduction:
    """Tests for check_subject_reduction."""

    BAD = "def Bad(x) = x?(u).(x?(v).0 | x?(w).0)"

    @pytest.mark.parametrize("source", ["x!y | x?(v).0", "0"])
    def test_well_typed_systems_pass(self, source):
        """Every reachable state of a well-typed system is well typed."""
        p = parse(source)
        report = check_subject_reduction(p, {}, Bounds(max_depth=4))
        assert report.passed
        assert report.states == len(build_lts(p, {}, Bounds(max_depth=4)).states)
        assert report.to_json()["violation"] is None

    def test_single_action_violation(self):
        """An instance whose body is ill typed breaks on its first input."""
        defs = parse_definitions(self.BAD)
        report = check_subject_reduction(parse("Bad<a;>", defs), defs, Bounds(max_depth=2))
        assert not report.passed
        assert report.violation.clause == "action"
        assert report.violation.reason.startswith("[COMP]")

    def test_step_violation(self):
        """The same break inside a joint step is reported as a step."""
        defs = parse_definitions(self.BAD)
        report = check_subject_reduction(parse("Bad<a;> | b!c", defs), defs, Bounds(max_depth=2))
        assert report.violation.clause == "step"
        assert len(report.violation.label) == 2

    def test_ill_typed_root_raises(self):
        """The system itself must be well typed."""
        with pytest.raises(TypingError):
            check_subject_reduction(parse("a?(x).0 | a?(y).0"))
