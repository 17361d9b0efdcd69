"""Command-line entry point for the apitc workbench.

Every subcommand reads configurations from files in the concrete syntax
(optionally preceded by ``def`` lines), runs one workbench operation and
reports on stdout. The exit code grades the outcome:

    0  success, related, well formed
    1  negative verdict (ill typed, distinguished, ill-formed trace,
       counterexample)
    2  usage or input error
    3  inconclusive because a bound was hit

Example:
    Typecheck a configuration::

        $ apitc typecheck msg.api
        rho = {}; f = {}

    Compare two configurations under weak step bisimilarity::

        $ apitc bisim left.api right.api --kind step --mode weak
"""

import argparse
import json
import logging
import sys
from collections.abc import Callable
from enum import IntEnum
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from apitc.bisim import EquivalenceKind, Mode, Status, check_equivalence, validate_relation
from apitc.config import WorkbenchConfig, load_config
from apitc.errors import ApitcError, TypingError
from apitc.events import Unfolding, unfold_to_pes
from apitc.laws import AXIOMS, parse_axiom_selection, rewrite_step, soundness_report
from apitc.lts import Bounds, build_lts
from apitc.parser import parse_module, parse_trace
from apitc.syntax import Config, Definitions, canonicalize, pretty_print
from apitc.traces import check_well_formed, rcp_extend, simulate_fair
from apitc.typesystem import check_definitions, typecheck

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


class ExitCode(IntEnum):
    """Process exit codes."""

    OK = 0
    NEGATIVE = 1
    INPUT_ERROR = 2
    INCONCLUSIVE = 3


_STATUS_EXIT = {
    Status.RELATED: ExitCode.OK,
    Status.DISTINGUISHED: ExitCode.NEGATIVE,
    Status.INCONCLUSIVE: ExitCode.INCONCLUSIVE,
}

_EPILOG = """
Environment Variables:
  APITC_CONFIG           Default config file (key=value lines)
  APITC_MAX_DEPTH        Maximum exploration depth (default: 6)
  APITC_MAX_STATES       Maximum states per transition system (default: 20000)
  APITC_UNIVERSE_EXTRA   Extra input names, comma separated (default: none)
  APITC_UNIVERSE_SIZE    Cap on the number of extra names (default: 8)
  APITC_FAIR_WINDOW      Fairness window in steps (default: 64)
  APITC_SEED             Seed for simulation and law instances (default: 0)
  APITC_LOG_LEVEL        Logging level: DEBUG, INFO, WARNING, ERROR
                         (default: WARNING)

Exit Codes:
  0 success or related, 1 negative verdict, 2 usage or input error,
  3 inconclusive (a bound was hit)

Examples:
  # Print the receptionists and temporary-name map
  apitc typecheck msg.api

  # Emit the transition system as Graphviz DOT
  apitc lts ping.api --depth 4 --out dot > ping.dot

  # Check a trace against an empty receptionist set
  apitc trace-check system.api --trace t1 --rho ""

  # Weak step bisimilarity, writing the certified relation
  apitc bisim a.api b.api --kind step --mode weak --emit-relation rel.json

  # Soundness matrix of the laws
  apitc laws --axioms A1-A20 --kinds step,pomset --modes strong,weak --out report.json
"""


def _names(text: str) -> list[str]:
    return [n.strip() for n in text.split(",") if n.strip()]


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="Config file (key=value lines); overrides APITC_CONFIG")
    common.add_argument("--depth", type=int, help="Maximum exploration depth (overrides APITC_MAX_DEPTH)")
    common.add_argument("--max-states", type=int, help="Maximum number of states (overrides APITC_MAX_STATES)")
    common.add_argument("--universe", metavar="NAMES", help="Extra input names, comma separated")
    common.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (overrides APITC_LOG_LEVEL)",
    )
    return common


def build_parser() -> argparse.ArgumentParser:
    """Build the argument parser with every subcommand."""
    parser = argparse.ArgumentParser(
        prog="apitc",
        description="apitc - workbench for a truly concurrent actor calculus",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=_EPILOG,
    )
    parser.add_argument("--version", action="store_true", help="Show version information and exit")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    common = _common_options()

    def command(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help_text, parents=[common])

    p = command("parse", "Parse a file and print its configuration")
    p.add_argument("file")
    p.add_argument("--canonical", action="store_true", help="Print the canonical alpha-variant")

    p = command("typecheck", "Print the typing judgement of a configuration")
    p.add_argument("file")
    p.add_argument("--out", choices=["text", "json"], default="text")

    p = command("lts", "Explore the transition system")
    p.add_argument("file")
    p.add_argument("--out", choices=["json", "dot"], default="json")

    p = command("pes", "Unfold the transition system into an event structure")
    p.add_argument("file")
    p.add_argument("--out", choices=["json"], default="json")

    p = command("trace-check", "Check that a trace is well formed")
    p.add_argument("file")
    p.add_argument("--trace", required=True, metavar="TRACEFILE", help="One trace item per line")
    p.add_argument("--rho", help="Receptionists, comma separated (default: typed receptionists of FILE)")
    p.add_argument("--out", choices=["text", "json"], default="text")

    p = command("simulate", "Run a configuration under the fair scheduler")
    p.add_argument("file")
    p.add_argument("--steps", type=int, default=100, help="Maximum number of steps (default: 100)")
    p.add_argument("--seed", type=int, help="Scheduler seed (overrides APITC_SEED)")
    p.add_argument("--fair-window", type=int, help="Fairness window (overrides APITC_FAIR_WINDOW)")

    p = command("bisim", "Decide a truly concurrent bisimilarity")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--kind", choices=[k.value for k in EquivalenceKind], default="step")
    p.add_argument("--mode", choices=[m.value for m in Mode], default="strong")
    p.add_argument("--rho", help="Receptionists, comma separated (default: union of typed receptionists)")
    p.add_argument("--emit-relation", metavar="PATH", help="Write the relation as JSON")
    p.add_argument("--out", choices=["text", "json"], default="text")

    p = command("laws", "Check the algebraic laws on generated instances")
    p.add_argument("--axioms", default="A1-A20", help="Selection such as A1-A5,A9 (default: A1-A20)")
    p.add_argument("--kinds", default="step", help="Comma separated kinds (default: step)")
    p.add_argument("--modes", default="strong", help="Comma separated modes (default: strong)")
    p.add_argument("--instances", type=int, default=20, help="Instances per axiom (default: 20)")
    p.add_argument("--seed", type=int, help="Instance seed (overrides APITC_SEED)")
    p.add_argument("--out", metavar="PATH", help="Write the JSON report here instead of stdout")

    p = command("rewrite", "Apply each law once wherever it matches")
    p.add_argument("file")
    p.add_argument("--direction", choices=["ltr", "rtl"], default="ltr")
    p.add_argument("--axioms", help="Selection such as A1-A5,A9 (default: all)")
    p.add_argument("--modulo-ac", action="store_true", help="Match up to rearranging parallel components")
    p.add_argument("--out", choices=["text", "json"], default="text")

    command("serve", "Run the MCP server on stdio")
    return parser


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Returns:
        Parsed arguments namespace.
    """
    return build_parser().parse_args(argv)


def _emit(data: dict[str, Any]) -> None:
    print(json.dumps({"schema_version": SCHEMA_VERSION, **data}, indent=2))


def _read_module(path: str) -> tuple[Config, Definitions]:
    text = Path(path).read_text(encoding="utf-8")
    return parse_module(text)


def _bounds(config: WorkbenchConfig) -> Bounds:
    return Bounds.from_config(config)


def _cmd_parse(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    p, defs = _read_module(args.file)
    for d in defs.values():
        print(d)
    print(pretty_print(canonicalize(p) if args.canonical else p))
    return ExitCode.OK


def _cmd_typecheck(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    p, defs = _read_module(args.file)
    try:
        check_definitions(defs)
        j = typecheck(p, defs)
    except TypingError as e:
        print(str(e))
        return ExitCode.NEGATIVE
    if args.out == "json":
        _emit(j.to_json())
    else:
        print(j)
    return ExitCode.OK


def _cmd_lts(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    p, defs = _read_module(args.file)
    lts = build_lts(p, defs, _bounds(config))
    if args.out == "dot":
        print(lts.to_dot())
    else:
        _emit(lts.to_json())
    return ExitCode.INCONCLUSIVE if lts.is_truncated else ExitCode.OK


def _cmd_pes(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    p, defs = _read_module(args.file)
    bounds = _bounds(config)
    unfolding = unfold_to_pes(build_lts(p, defs, bounds), bounds.max_depth)
    _emit(unfolding.to_json())
    return ExitCode.INCONCLUSIVE if unfolding.truncated else ExitCode.OK


def _cmd_trace_check(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    p, defs = _read_module(args.file)
    trace = parse_trace(Path(args.trace).read_text(encoding="utf-8"))
    if args.rho is None:
        rho = typecheck(p, defs).receptionists
    else:
        rho = frozenset(_names(args.rho))
    verdict = check_well_formed(rho, trace)
    if args.out == "json":
        _emit({**verdict.to_json(), "rho": sorted(rho), "rcp": sorted(rcp_extend(rho, trace))})
    elif verdict.ok:
        print(f"well formed for rho = {{{', '.join(sorted(rho))}}}")
    else:
        print(f"not well formed at item {verdict.index}: {verdict.reason}")
    return ExitCode.OK if verdict.ok else ExitCode.NEGATIVE


def _cmd_simulate(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    p, defs = _read_module(args.file)
    if args.steps < 1:
        msg = "--steps must be positive"
        raise ValueError(msg)
    log = simulate_fair(
        p,
        defs,
        max_steps=args.steps,
        seed=config.seed if args.seed is None else args.seed,
        window=config.fair_window if args.fair_window is None else args.fair_window,
        universe=frozenset(config.universe_extra[: config.universe_size]),
    )
    _emit(log.to_json())
    return ExitCode.OK


def _cmd_bisim(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    p, defs1 = _read_module(args.file1)
    q, defs2 = _read_module(args.file2)
    clash = {n for n in defs1.keys() & defs2.keys() if defs1[n] != defs2[n]}
    if clash:
        msg = f"behaviours defined differently in both files: {sorted(clash)}"
        raise ApitcError(msg)
    defs = {**defs1, **defs2}
    kind, mode = EquivalenceKind(args.kind), Mode(args.mode)
    rho = None if args.rho is None else _names(args.rho)
    captured: list[Unfolding] = []
    verdict = check_equivalence(
        p, q, kind, mode, defs, _bounds(config), rho, on_unfold=lambda u1, u2: captured.extend((u1, u2))
    )
    if args.emit_relation:
        problems = validate_relation(verdict.relation, *captured, kind, mode, verdict.rho) if verdict.related else []
        relation = {
            "schema_version": SCHEMA_VERSION,
            "status": verdict.status.value,
            "certified": verdict.related and not problems,
            "problems": problems,
            "left": captured[0].to_json(),
            "right": captured[1].to_json(),
            "positions": [pos.to_json() for pos in sorted(verdict.relation, key=_position_key)],
        }
        Path(args.emit_relation).write_text(json.dumps(relation, indent=2), encoding="utf-8")
        logger.info("Wrote %d positions to %s", len(verdict.relation), args.emit_relation)
    if args.out == "json":
        _emit(verdict.to_json())
    else:
        print(f"{verdict.status.value} ({mode.value} {kind.value}, rho = {{{', '.join(sorted(verdict.rho))}}})")
        for move in verdict.witness:
            print(f"  {move.side} plays {move.challenge}; answer: {move.response or 'none'}")
    return _STATUS_EXIT[verdict.status]


def _position_key(pos: Any) -> tuple:
    return (len(pos.left) + len(pos.right), sorted(pos.left), sorted(pos.right), pos.mapping)


def _cmd_laws(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    report = soundness_report(
        axioms=parse_axiom_selection(args.axioms),
        instances=args.instances,
        kinds=[EquivalenceKind(k) for k in _names(args.kinds)],
        modes=[Mode(m) for m in _names(args.modes)],
        bounds=_bounds(config),
        seed=config.seed if args.seed is None else args.seed,
    )
    text = json.dumps(report.to_json(), indent=2)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        for (axiom, kind, mode), verdict in report.matrix.items():
            print(f"{axiom:4} {mode:6} {kind:6} {verdict}")
    else:
        print(text)
    verdicts = set(report.matrix.values())
    if "counterexample" in verdicts:
        return ExitCode.NEGATIVE
    if "inconclusive" in verdicts:
        return ExitCode.INCONCLUSIVE
    return ExitCode.OK


def _cmd_rewrite(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    p, _ = _read_module(args.file)
    axioms = parse_axiom_selection(args.axioms) if args.axioms else list(AXIOMS)
    results = rewrite_step(p, args.direction, axioms, modulo_ac=args.modulo_ac)
    if args.out == "json":
        _emit({"results": [{"axiom": schema.id, "term": pretty_print(term)} for schema, term in results]})
    else:
        for schema, term in results:
            print(f"{schema.id}: {pretty_print(term)}")
    return ExitCode.OK


def _cmd_serve(args: argparse.Namespace, config: WorkbenchConfig) -> int:
    from apitc.server import run_server

    run_server(config)
    return ExitCode.OK


_COMMANDS: dict[str, Callable[[argparse.Namespace, WorkbenchConfig], int]] = {
    "parse": _cmd_parse,
    "typecheck": _cmd_typecheck,
    "lts": _cmd_lts,
    "pes": _cmd_pes,
    "trace-check": _cmd_trace_check,
    "simulate": _cmd_simulate,
    "bisim": _cmd_bisim,
    "laws": _cmd_laws,
    "rewrite": _cmd_rewrite,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else ExitCode.INPUT_ERROR

    if args.version:
        from apitc import __version__

        print(f"apitc {__version__}")
        return ExitCode.OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return ExitCode.INPUT_ERROR

    try:
        config = load_config(
            args.config,
            max_depth=args.depth,
            max_states=args.max_states,
            universe_extra=args.universe,
            log_level=args.log_level,
        )
    except (FileNotFoundError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.INPUT_ERROR

    logging.basicConfig(
        level=config.log_level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger().setLevel(config.log_level)
    logger.debug("Running %s with %s", args.command, config)

    try:
        return int(_COMMANDS[args.command](args, config))
    except (ApitcError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
