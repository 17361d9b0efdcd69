"""Tests for the bisimulation games."""

import pytest

from apitc.bisim import (
    EquivalenceKind,
    Mode,
    Position,
    Status,
    check_equivalence,
    compute_relation,
    validate_relation,
)
from apitc.errors import BisimError
from apitc.events import unfold_to_pes
from apitc.lts import Bounds, build_lts
from apitc.parser import parse

ALL_KINDS = list(EquivalenceKind)


def unfold(source, depth=4):
    return unfold_to_pes(build_lts(parse(source), {}, Bounds(max_depth=depth)), depth)


class TestReflexivity:
    """Every configuration is related to itself."""

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("source", ["0", "a!b", "tau.a!b", "x!y | x?(v).v!v"])
    def test_related_to_itself(self, source, kind, small_bounds):
        """Strong games relate a term to itself."""
        p = parse(source)
        verdict = check_equivalence(p, p, kind, Mode.STRONG, bounds=small_bounds)
        assert verdict.status is Status.RELATED
        assert verdict.related
        assert not verdict.truncated

    def test_relation_validates(self, small_bounds):
        """The computed relation passes an independent transfer check."""
        captured = []
        p = parse("x!y | x?(v).v!v")
        verdict = check_equivalence(
            p, p, EquivalenceKind.HP, bounds=small_bounds, on_unfold=lambda u1, u2: captured.extend((u1, u2))
        )
        u1, u2 = captured
        assert validate_relation(verdict.relation, u1, u2, EquivalenceKind.HP, Mode.STRONG, verdict.rho) == []


class TestDistinguishing:
    """Tests for inequivalent configurations."""

    def test_different_messages(self, small_bounds):
        """Messages with different objects are told apart."""
        verdict = check_equivalence(parse("a!b"), parse("a!c"), bounds=small_bounds)
        assert verdict.status is Status.DISTINGUISHED
        assert verdict.witness
        assert verdict.witness[0].response is None

    @pytest.mark.parametrize("kind", list(EquivalenceKind))
    def test_tau_visible_when_strong(self, small_bounds, kind):
        """A strong game sees internal steps."""
        verdict = check_equivalence(parse("tau.a!b"), parse("a!b"), kind=kind, bounds=small_bounds)
        assert verdict.status is Status.DISTINGUISHED

    @pytest.mark.parametrize("kind", [EquivalenceKind.HP, EquivalenceKind.HHP])
    def test_strong_history_game_matches_tau_with_tau(self, small_bounds, kind):
        """A strong history game answers an internal event with an internal event."""
        verdict = check_equivalence(parse("tau.a!b"), parse("tau.a!b"), kind=kind, bounds=small_bounds)
        assert verdict.status is Status.RELATED

    def test_tau_hidden_when_weak(self, small_bounds):
        """A weak game abstracts from internal steps."""
        verdict = check_equivalence(parse("tau.a!b"), parse("a!b"), mode=Mode.WEAK, bounds=small_bounds)
        assert verdict.status is Status.RELATED

    def test_nil_against_message(self, small_bounds):
        """0 cannot answer an output."""
        verdict = check_equivalence(parse("0"), parse("a!b"), bounds=small_bounds)
        assert not verdict.related


class TestSpecificPairs:
    """Known equivalences and inequivalences."""

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_parallel_messages_commute(self, kind, small_bounds):
        """Swapping two parallel messages does not change behaviour."""
        verdict = check_equivalence(parse("x!y | u!v"), parse("u!v | x!y"), kind, bounds=small_bounds)
        assert verdict.status is Status.RELATED

    def test_sequential_inputs_against_parallel_inputs(self, small_bounds):
        """Parallel actors take their inputs in one step; a sequential actor cannot.

        The sequential side has no typing judgement, so the game is played
        under an empty receptionist set.
        """
        verdict = check_equivalence(
            parse("a?(x).b?(y).0"), parse("a?(x).0 | b?(y).0"), EquivalenceKind.STEP, rho=[], bounds=small_bounds
        )
        assert verdict.status is Status.DISTINGUISHED
        assert verdict.witness

    def test_choice_behind_tau_is_weakly_equal(self, small_bounds):
        """A leading tau before a choice is invisible to the weak game."""
        verdict = check_equivalence(
            parse("tau.case c of {c: 0, c: a!c}"),
            parse("case c of {c: 0, c: a!c}"),
            mode=Mode.WEAK,
            rho=[],
            bounds=small_bounds,
        )
        assert verdict.status is Status.RELATED


class TestComputeRelation:
    """Tests for the relation returned by compute_relation."""

    def test_nil_pair(self):
        """Two inert terms relate exactly their empty configurations."""
        verdict = compute_relation(unfold("0"), unfold("0"))
        assert verdict.relation == frozenset({Position(frozenset(), frozenset())})

    def test_sum_of_one_weakly_related(self):
        """A one-branch sum relates both before and after its internal step."""
        left, right = unfold("x!y"), unfold("nu u. case u of {u: x!y}")
        assert right.pes.label(0).is_tau
        verdict = compute_relation(left, right, EquivalenceKind.STEP, Mode.WEAK)
        assert verdict.status is Status.RELATED
        assert Position(frozenset(), frozenset()) in verdict.relation
        assert Position(frozenset(), frozenset({0})) in verdict.relation
        assert validate_relation(verdict.relation, left, right, EquivalenceKind.STEP, Mode.WEAK) == []

    def test_sum_of_one_strongly_distinguished(self):
        """The strong game sees the internal step of the sum."""
        verdict = compute_relation(unfold("x!y"), unfold("nu u. case u of {u: x!y}"))
        assert verdict.status is Status.DISTINGUISHED

    def test_no_room_for_positions(self):
        """A game without room for the start position is rejected."""
        u = unfold("0")
        with pytest.raises(BisimError):
            compute_relation(u, u, max_positions=0)


class TestSymmetry:
    """Swapping the sides never changes the verdict."""

    @pytest.mark.parametrize("kind", ALL_KINDS)
    @pytest.mark.parametrize("mode", list(Mode))
    @pytest.mark.parametrize(
        ("left", "right"),
        [("a!b", "a!c"), ("tau.a!b", "a!b"), ("x!y | u!v", "u!v | x!y"), ("a?(x).0", "a?(x).a!x")],
    )
    def test_symmetric(self, left, right, kind, mode, small_bounds):
        """Both orders of the same pair get the same status."""
        p, q = parse(left), parse(right)
        forward = check_equivalence(p, q, kind, mode, rho=[], bounds=small_bounds)
        backward = check_equivalence(q, p, kind, mode, rho=[], bounds=small_bounds)
        assert forward.status is backward.status


class TestReceptionists:
    """Tests for the receptionist set a game is played under."""

    def test_default_rho_is_typed(self, small_bounds):
        """Without rho the typed receptionists of both sides are used."""
        verdict = check_equivalence(parse("a?(x).0"), parse("b?(x).0"), bounds=small_bounds)
        assert verdict.rho == frozenset({"a", "b"})

    def test_explicit_rho(self, small_bounds):
        """An explicit rho overrides typing."""
        p = parse("a!b")
        verdict = check_equivalence(p, p, rho=["z"], bounds=small_bounds)
        assert verdict.rho == frozenset({"z"})


class TestBounds:
    """Tests for bounded exploration."""

    def test_truncation_is_inconclusive(self, diverge_defs):
        """An unfinished exploration never yields a definite verdict."""
        p = parse("Diverge<x;> | x!u", diverge_defs)
        verdict = check_equivalence(p, p, defs=diverge_defs, bounds=Bounds(max_depth=2, max_states=500))
        assert verdict.status is Status.INCONCLUSIVE
        assert verdict.truncated

    def test_zero_depth_rejected(self):
        """Depth 0 leaves nothing to compare."""
        with pytest.raises(ValueError, match="bounds must be positive"):
            check_equivalence(parse("0"), parse("0"), bounds=Bounds(max_depth=0))

    def test_json(self, small_bounds):
        """The verdict serializes its status and witness."""
        data = check_equivalence(parse("a!b"), parse("a!c"), bounds=small_bounds).to_json()
        assert data["status"] == "distinguished"
        assert data["kind"] == "step"
        assert data["witness"]
