"""Tests for the algebraic laws and the soundness harness."""

import random

import pytest

from apitc.bisim import EquivalenceKind, Mode, Status, check_equivalence
from apitc.errors import AxiomRejected
from apitc.laws import (
    AXIOMS,
    LEDGER_NOTES,
    check_sum_structure,
    generate_instances,
    instantiate_axiom,
    parse_axiom_selection,
    rewrite_step,
    soundness_report,
)
from apitc.parser import parse
from apitc.syntax import alpha_eq
from apitc.typesystem import typecheck


class TestAxiomTable:
    """Tests for the axiom definitions."""

    def test_twenty_axioms(self):
        """A1 to A20 are all defined."""
        assert list(AXIOMS) == [f"A{i}" for i in range(1, 21)]

    def test_reversibility(self):
        """Laws whose right side forgets variables only rewrite left to right."""
        assert AXIOMS["A4"].reversible
        assert not AXIOMS["A6"].reversible
        assert not AXIOMS["A20"].reversible

    def test_json(self):
        """An axiom serializes with its side conditions."""
        data = AXIOMS["A10"].to_json()
        assert data["id"] == "A10"
        assert len(data["side_conditions"]) == 2


class TestSelection:
    """Tests for parse_axiom_selection."""

    def test_ranges_and_singles(self):
        """Ranges and single ids combine in order."""
        assert parse_axiom_selection("A1-A3,A9") == ["A1", "A2", "A3", "A9"]

    def test_duplicates_dropped(self):
        """Each axiom appears once."""
        assert parse_axiom_selection("a3, A3,A2-3") == ["A3", "A2"]

    @pytest.mark.parametrize("text", ["A21", "B1", "A1-A30", "A"])
    def test_invalid(self, text):
        """Unknown or malformed selections are rejected."""
        with pytest.raises(ValueError):
            parse_axiom_selection(text)


class TestInstantiate:
    """Tests for instantiate_axiom."""

    def test_unit_law(self):
        """A3 pads the process with 0."""
        lhs, rhs = instantiate_axiom("A3", {"P": parse("a!b")})
        assert lhs == parse("a!b | 0")
        assert rhs == parse("a!b")

    def test_unbound_variable(self):
        """Every variable of the left side must be bound."""
        with pytest.raises(AxiomRejected):
            instantiate_axiom("A4", {"P": parse("a!b")})

    def test_side_condition(self):
        """A10 needs the restricted name to differ from the input subject."""
        with pytest.raises(AxiomRejected):
            instantiate_axiom("A10", {"x": "a", "y": "a", "z": "b", "P": parse("0")})

    def test_unknown_axiom(self):
        """Only A1 to A20 exist."""
        with pytest.raises(ValueError):
            instantiate_axiom("A99", {})

    def test_generated_instances_typecheck(self):
        """Generated instances are well typed on both sides."""
        for lhs, rhs in generate_instances("A16", 5, random.Random(0)):
            typecheck(lhs)
            typecheck(rhs)

    def test_sum_structure(self):
        """The one-branch sum of P reaches P by a single tau."""
        p = parse("a!b")
        lhs, rhs = instantiate_axiom("A13", {"P": p})
        assert lhs == p
        assert check_sum_structure(lhs, rhs)


class TestRewrite:
    """Tests for rewrite_step."""

    def test_communication_under_restriction(self):
        """A9 substitutes the message object into the receiver."""
        results = rewrite_step(parse("nu x. (x!y | x?(z).z!z)"), axioms=["A9"])
        assert len(results) == 1
        schema, term = results[0]
        assert schema.id == "A9"
        assert alpha_eq(term, parse("nu x. y!y"))

    def test_nil_has_no_redex(self):
        """Nothing rewrites 0 into something different."""
        assert rewrite_step(parse("0")) == []

    def test_unit_inside_context(self):
        """Redexes below the root are rewritten in place."""
        results = rewrite_step(parse("a?(u).(u!a | 0)"), axioms=["A3"])
        assert [alpha_eq(term, parse("a?(u).u!a")) for _, term in results] == [True]

    def test_right_to_left_skips_irreversible(self):
        """Laws that need derived bindings never fire right to left."""
        assert rewrite_step(parse("a!b"), "rtl", ["A6", "A11", "A12", "A20"]) == []

    def test_bad_direction(self):
        """Only ltr and rtl are accepted."""
        with pytest.raises(ValueError):
            rewrite_step(parse("0"), "up")


@pytest.mark.slow
class TestSoundnessReport:
    """Tests for soundness_report."""

    def test_structural_laws_hold(self):
        """The unit and commutativity laws hold for strong step bisimilarity."""
        report = soundness_report(["A3", "A4"], instances=3, seed=1)
        assert report.cell("A3", "step", "strong").verdict == "related"
        assert report.cell("A4", EquivalenceKind.STEP, Mode.STRONG).verdict == "related"

    def test_json(self):
        """The report carries its schema version and seed."""
        data = soundness_report(["A3"], instances=1, seed=5).to_json()
        assert data["schema_version"] == 1
        assert data["seed"] == 5
        assert [c["axiom"] for c in data["cells"]] == ["A3"]

    def test_instances_must_be_positive(self):
        """At least one instance per law is required."""
        with pytest.raises(ValueError):
            soundness_report(["A3"], instances=0)


class TestLedgerNotes:
    """Tests for the known causes of negative cells."""

    def test_notes_name_defined_axioms(self):
        """Every note belongs to an axiom in the table."""
        assert set(LEDGER_NOTES) <= set(AXIOMS)

    def test_self_communication_is_seen_by_strong_step(self, small_bounds):
        """A message to the receiving actor is consumed internally on the left only."""
        verdict = check_equivalence(
            parse("b!c | b?(a).0"),
            parse("(b!c & b?(a)).0"),
            kind=EquivalenceKind.STEP,
            mode=Mode.STRONG,
            bounds=small_bounds,
            rho=["b"],
        )
        assert verdict.status is Status.DISTINGUISHED
