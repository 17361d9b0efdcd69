"""Tests for the apitc command line."""

import json

import pytest

from apitc.cli import ExitCode, main, parse_args
from tests.conftest import DIVERGE


@pytest.fixture(autouse=True)
def isolated(clean_env, tmp_path, monkeypatch):
    """Run every command from an empty directory without APITC_* settings."""
    monkeypatch.chdir(tmp_path)


class TestParseArgs:
    """Tests for argument parsing."""

    def test_defaults(self):
        """Bisim defaults to strong step bisimilarity."""
        args = parse_args(["bisim", "a.api", "b.api"])
        assert args.kind == "step"
        assert args.mode == "strong"
        assert args.rho is None

    def test_common_options(self):
        """Every subcommand accepts the bound options."""
        args = parse_args(["lts", "a.api", "--depth", "3", "--max-states", "10", "--universe", "p,q"])
        assert args.depth == 3
        assert args.max_states == 10
        assert args.universe == "p,q"

    def test_laws_defaults(self):
        """Laws check all twenty axioms by default."""
        args = parse_args(["laws"])
        assert args.axioms == "A1-A20"
        assert args.instances == 20


class TestMain:
    """Tests for exit codes and output of main."""

    def test_version(self, capsys):
        """--version prints the version."""
        assert main(["--version"]) == ExitCode.OK
        assert capsys.readouterr().out.startswith("apitc ")

    def test_no_command(self):
        """A command is required."""
        assert main([]) == ExitCode.INPUT_ERROR

    def test_unknown_option(self):
        """Bad arguments are a usage error."""
        assert main(["typecheck"]) == ExitCode.INPUT_ERROR

    def test_missing_file(self):
        """An unreadable input file is an input error."""
        assert main(["parse", "absent.api"]) == ExitCode.INPUT_ERROR

    def test_syntax_error(self, write_file, capsys):
        """A syntax error is reported on stderr."""
        path = write_file("bad.api", "a!(")
        assert main(["parse", str(path)]) == ExitCode.INPUT_ERROR
        assert capsys.readouterr().err.startswith("error:")

    def test_missing_config_file(self, write_file):
        """An explicit config file must exist."""
        path = write_file("msg.api", "x!y")
        assert main(["parse", str(path), "--config", "absent.conf"]) == ExitCode.INPUT_ERROR

    def test_parse_prints_definitions(self, write_file, capsys):
        """Definitions are echoed before the configuration."""
        path = write_file("loop.api", f"{DIVERGE}\nDiverge<x;>")
        assert main(["parse", str(path)]) == ExitCode.OK
        out = capsys.readouterr().out.splitlines()
        assert out[0].startswith("def Diverge(x)")
        assert out[1] == "Diverge<x;>"


class TestTypecheckCommand:
    """Tests for apitc typecheck."""

    def test_message(self, write_file, capsys):
        """A message has no receptionists and no temporary names."""
        path = write_file("msg.api", "x!y")
        assert main(["typecheck", str(path)]) == ExitCode.OK
        assert capsys.readouterr().out.strip() == "rho = {}; f = {}"

    def test_json(self, write_file, capsys):
        """JSON output carries the schema version."""
        path = write_file("actor.api", "a?(x).x!a")
        assert main(["typecheck", str(path), "--out", "json"]) == ExitCode.OK
        data = json.loads(capsys.readouterr().out)
        assert data["schema_version"] == 1
        assert data["rho"] == ["a"]

    def test_ill_typed(self, write_file):
        """Two actors on one name are ill typed."""
        path = write_file("twice.api", "a?(x).0 | a?(y).0")
        assert main(["typecheck", str(path)]) == ExitCode.NEGATIVE


class TestExplorationCommands:
    """Tests for apitc lts, pes and simulate."""

    def test_lts_dot(self, write_file, capsys):
        """The transition system renders as DOT."""
        path = write_file("com.api", "x!y | x?(v).0")
        assert main(["lts", str(path), "--out", "dot"]) == ExitCode.OK
        assert "digraph" in capsys.readouterr().out

    def test_lts_truncated(self, write_file):
        """Hitting the state bound is inconclusive."""
        path = write_file("loop.api", f"{DIVERGE}\nDiverge<x;>")
        assert main(["lts", str(path), "--max-states", "3"]) == ExitCode.INCONCLUSIVE

    def test_pes(self, write_file, capsys):
        """The event structure is printed as JSON."""
        path = write_file("seq.api", "tau.a!b")
        assert main(["pes", str(path)]) == ExitCode.OK
        assert len(json.loads(capsys.readouterr().out)["events"]) == 2

    def test_simulate(self, write_file, capsys):
        """A simulation prints its run log."""
        path = write_file("com.api", "x!y | x?(v).0")
        assert main(["simulate", str(path), "--seed", "1"]) == ExitCode.OK
        data = json.loads(capsys.readouterr().out)
        assert data["stopped"] == "deadlock"
        assert data["seed"] == 1

    def test_simulate_needs_steps(self, write_file):
        """At least one step must be allowed."""
        path = write_file("com.api", "x!y | x?(v).0")
        assert main(["simulate", str(path), "--steps", "0"]) == ExitCode.INPUT_ERROR


class TestTraceCheckCommand:
    """Tests for apitc trace-check."""

    def test_well_formed(self, write_file, capsys):
        """Inputs on the typed receptionists are accepted."""
        system = write_file("actor.api", "a?(x).x!a")
        trace = write_file("t1", "a?b\n")
        assert main(["trace-check", str(system), "--trace", str(trace)]) == ExitCode.OK
        assert "rho = {a}" in capsys.readouterr().out

    def test_ill_formed(self, write_file, capsys):
        """Sending to an exported name is rejected."""
        system = write_file("msg.api", "x!y")
        trace = write_file("t1", "[x] y!(x)\nx!x\n")
        assert main(["trace-check", str(system), "--trace", str(trace), "--rho", ""]) == ExitCode.NEGATIVE
        assert "item 1" in capsys.readouterr().out


class TestBisimCommand:
    """Tests for apitc bisim."""

    def test_reflexive(self, write_file, capsys):
        """A configuration is bisimilar to itself."""
        path = write_file("com.api", "x!y | x?(v).v!v")
        assert main(["bisim", str(path), str(path)]) == ExitCode.OK
        assert capsys.readouterr().out.startswith("related")

    def test_distinguished(self, write_file):
        """Different messages are distinguished."""
        left = write_file("l.api", "a!b")
        right = write_file("r.api", "a!c")
        assert main(["bisim", str(left), str(right), "--kind", "hp"]) == ExitCode.NEGATIVE

    def test_emit_relation(self, write_file, tmp_path):
        """The emitted relation is certified for related configurations."""
        path = write_file("seq.api", "tau.a!b")
        out = tmp_path / "rel.json"
        assert main(["bisim", str(path), str(path), "--emit-relation", str(out)]) == ExitCode.OK
        relation = json.loads(out.read_text())
        assert relation["certified"] is True
        assert relation["positions"][0] == {"left": [], "right": []}

    def test_clashing_definitions(self, write_file):
        """A behaviour may not mean different things in the two files."""
        left = write_file("l.api", f"{DIVERGE}\nDiverge<x;>")
        right = write_file("r.api", "def Diverge(x) = x?(u).0\nDiverge<x;>")
        assert main(["bisim", str(left), str(right)]) == ExitCode.INPUT_ERROR


class TestLawCommands:
    """Tests for apitc rewrite and laws."""

    def test_rewrite(self, write_file, capsys):
        """Each rewrite is printed with its axiom."""
        path = write_file("redex.api", "nu x. (x!y | x?(z).z!z)")
        assert main(["rewrite", str(path), "--axioms", "A9"]) == ExitCode.OK
        assert capsys.readouterr().out.startswith("A9: ")

    def test_bad_selection(self, write_file):
        """Unknown axioms are an input error."""
        path = write_file("redex.api", "0")
        assert main(["rewrite", str(path), "--axioms", "A42"]) == ExitCode.INPUT_ERROR

    @pytest.mark.slow
    def test_laws_report_file(self, tmp_path, capsys):
        """The report goes to --out and the matrix to stdout."""
        out = tmp_path / "report.json"
        assert main(["laws", "--axioms", "A3", "--instances", "2", "--out", str(out)]) == ExitCode.OK
        assert json.loads(out.read_text())["cells"][0]["verdict"] == "related"
        assert "A3" in capsys.readouterr().out
