"""Tests for the abstract syntax and name handling."""

import random

from apitc.generate import random_term
from apitc.parser import parse, parse_definitions
from apitc.syntax import (
    NIL,
    Input,
    Msg,
    Par,
    ac_normalize,
    alpha_eq,
    bound_names,
    canonicalize,
    free_names,
    fresh_name,
    is_generated,
    names,
    par_components,
    par_of,
    pretty_print,
    substitute,
)


class TestNames:
    """Tests for free, bound and generated names."""

    def test_free_names_skip_binders(self):
        """Restricted and received names are not free."""
        p = parse("nu x. (x!y | a?(z).z!x)")
        assert free_names(p) == {"y", "a"}

    def test_case_guards_are_free(self):
        """Scrutinee and guards of a case count as free."""
        p = parse("case u of { v: 0, w: a!b }")
        assert free_names(p) == {"u", "v", "w", "a", "b"}

    def test_bound_names(self):
        """bound_names holds names that occur only bound."""
        p = parse("nu x. (x!y | a?(z).0)")
        assert bound_names(p) == {"x", "z"}
        assert names(p) == {"x", "y", "a", "z"}

    def test_fresh_name_uses_stem(self):
        """Fresh names reuse the stem of a generated name."""
        assert fresh_name("w'3", {"w'0"}) == "w'1"
        assert fresh_name("x", set()) == "x'0"

    def test_is_generated(self):
        """Only primed names are generated."""
        assert is_generated("b'0")
        assert not is_generated("b0")


class TestSubstitution:
    """Tests for capture-avoiding substitution."""

    def test_substitute_free_occurrences(self):
        """Free occurrences are renamed, bound ones are not."""
        p = parse("a!x | x?(x).x!a")
        assert alpha_eq(substitute(p, {"x": "c"}), parse("a!c | c?(v).v!a"))

    def test_substitute_avoids_capture(self):
        """A binder that would capture the new name is renamed first."""
        p = parse("x?(y).y!z")
        assert substitute(p, {"z": "y"}) == Input("x", "y'0", Msg("y'0", "y"))

    def test_identity_substitution(self):
        """An identity renaming returns the same term."""
        p = parse("x?(y).y!z")
        assert substitute(p, {"x": "x"}) is p


class TestCanonicalForms:
    """Tests for canonicalization and alpha-equivalence."""

    def test_alpha_variants_are_equal(self):
        """Renaming a binder does not change the canonical form."""
        assert alpha_eq(parse("x?(u).u!u"), parse("x?(v).v!v"))
        assert not alpha_eq(parse("x?(u).u!u"), parse("x?(v).v!u"))

    def test_canonical_binders(self):
        """Binders become b'0, b'1 by nesting depth."""
        assert canonicalize(parse("x?(u).u!u")) == Input("x", "b'0", Msg("b'0", "b'0"))

    def test_msg_drops_nil_continuation(self):
        """x!y.0 and x!y are the same term."""
        assert Msg("x", "y", NIL) == Msg("x", "y")

    def test_generated_terms_round_trip(self):
        """Printing and re-parsing preserves generated terms up to alpha."""
        rng = random.Random(7)
        for _ in range(200):
            p = random_term(rng, 4)
            assert alpha_eq(parse(pretty_print(p), allow_generated=True), p)

    def test_canonical_terms_round_trip(self):
        """Canonical forms print with primed names that re-parse."""
        p = canonicalize(parse("nu x. (x?(y).y!x | a!x)"))
        assert parse(pretty_print(p), allow_generated=True) == p


class TestParallel:
    """Tests for flattening and normalizing parallel composition."""

    def test_components_and_rebuild(self):
        """par_of rebuilds a left-associated composition."""
        p = parse("a!b | (c!d | e!f)")
        parts = par_components(p)
        assert [pretty_print(c) for c in parts] == ["a!b", "c!d", "e!f"]
        assert par_of(parts) == Par(Par(parts[0], parts[1]), parts[2])
        assert par_of([]) == NIL

    def test_ac_normalize_sorts_components(self):
        """Components are sorted by their printed canonical form."""
        assert pretty_print(ac_normalize(parse("b!a | (c!c | a!b)"))) == "a!b | b!a | c!c"


class TestBehaviorDef:
    """Tests for printing behaviour definitions."""

    def test_str_round_trips(self):
        """A printed definition parses back to itself."""
        defs = parse_definitions("def B(x, y; z) = x?(u).(y!z | B<x, y; u>)")
        text = str(defs["B"])
        assert text == "def B(x, y; z) = x?(u).(y!z | B<x, y; u>)"
        assert parse_definitions(text) == defs
