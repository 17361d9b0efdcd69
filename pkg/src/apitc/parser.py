"""Concrete syntax: a lark grammar and transformers to the AST.

Grammar summary::

    P ::= 0 | x!y | x!y.P | x?(y).P | nu x. P | (nu x) P | tau.P
        | (a1 & ... & an).P | case x of { y1: P1, ..., yn: Pn }
        | B<x1, x2; y1, ..., yn> | P | P | (P)
    a ::= x!y | x?(y)
    def B(x1, x2; y1, ..., yn) = P

``|`` binds loosest and associates to the left; prefixes take a single
prefixed term as body, so ``nu x. P | Q`` is ``(nu x. P) | Q``. Comments
start with ``#``.
"""

from __future__ import annotations

import logging
from functools import cache
from typing import Any

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from apitc.actions import ActionKind, ActionLabel, TraceItem
from apitc.errors import ApitcError, DefinitionError, ParseError
from apitc.patterns import MetaPrefix, MetaProc, MetaSplice, MetaSum
from apitc.syntax import (
    BehaviorDef,
    Case,
    Config,
    Definitions,
    Inst,
    Input,
    InputAtom,
    Msg,
    Nil,
    OutputAtom,
    Par,
    Restriction,
    StepPrefix,
    TauPrefix,
    is_generated,
    subterms,
)

logger = logging.getLogger(__name__)

MAX_ACTOR_PARAMS = 2

_GRAMMAR = r"""
module: definition* process
definitions: definition*
item: binderset? action ("|" action)*

?process: process "|" prefixed -> par
        | prefixed

?prefixed: "0"                                  -> nil
         | name "!" name                        -> msg
         | name "!" name "." prefixed           -> msg_then
         | name "?" "(" name ")" "." prefixed   -> input
         | "nu" name "." prefixed               -> restriction
         | "(" "nu" name ")" prefixed           -> restriction
         | "tau" "." prefixed                   -> tau
         | "(" atom ("&" atom)* ")" "." prefixed -> joint
         | "case" name "of" "{" branch ("," branch)* ","? "}" -> case
         | name "<" [namelist] ";" [namelist] ">" -> inst
         | name "<" [namelist] ">"             -> inst_actors
         | "(" process ")"
         %(extra)s

atom: name "!" name                  -> out_atom
    | name "?" "(" name ")"          -> in_atom

branch: name ":" process
namelist: name ("," name)*
definition: "def" name "(" [namelist] ";" [namelist] ")" "=" process
          | "def" name "(" [namelist] ")" "=" process -> definition_actors

binderset: "[" [namelist] "]"
action: name "!" name                -> a_out
      | name "!" "(" name ")"        -> a_bout
      | name "?" name                -> a_in
      | name "?" "(" name ")"        -> a_bin
      | "tau"                        -> a_tau

name: NAME

NAME: /(?!(nu|tau|case|of|def|sum)\b)[A-Za-z_][A-Za-z0-9_]*('[0-9]+)?/
COMMENT: /#[^\n]*/

%%import common.WS
%%ignore WS
%%ignore COMMENT
"""

_PATTERN_EXTRA = r"""
         | "$" NAME                              -> meta
         | "$" NAME "{" subst ("," subst)* "}"   -> meta_subst
         | "sum" "{" summand ("," summand)* "}"  -> sum
         | "@" NAME "." prefixed                 -> meta_prefix

subst: name "/" name
summand: "$" NAME "*"  -> splice
       | process       -> single
"""

_STARTS = ["module", "definitions", "process", "item"]


@cache
def _parser(patterns: bool = False) -> Lark:
    extra = _PATTERN_EXTRA if patterns else ""
    grammar = _GRAMMAR % {"extra": extra}
    starts = [*_STARTS, "pattern"] if patterns else _STARTS
    if patterns:
        grammar += "\npattern: process\n"
    return Lark(grammar, start=starts, parser="earley", propagate_positions=True)


@v_args(inline=True)
class ConfigTransformer(Transformer):
    """Build AST nodes from the parse tree."""

    def __init__(self, allow_generated: bool = False):
        super().__init__()
        self.allow_generated = allow_generated

    def name(self, token: Token) -> str:
        if is_generated(token.value) and not self.allow_generated:
            msg = f"'{token.value}' is reserved for generated names"
            raise ParseError(msg, token.line, token.column)
        return str(token.value)

    def namelist(self, *items: str) -> tuple[str, ...]:
        return items

    def nil(self) -> Config:
        return Nil()

    def msg(self, subject: str, obj: str) -> Config:
        return Msg(subject, obj)

    def msg_then(self, subject: str, obj: str, cont: Config) -> Config:
        return Msg(subject, obj, cont)

    def input(self, subject: str, binder: str, body: Config) -> Config:
        return Input(subject, binder, body)

    def restriction(self, binder: str, body: Config) -> Config:
        return Restriction(binder, body)

    def tau(self, body: Config) -> Config:
        return TauPrefix(body)

    def par(self, left: Config, right: Config) -> Config:
        return Par(left, right)

    def out_atom(self, subject: str, obj: str) -> OutputAtom:
        return OutputAtom(subject, obj)

    def in_atom(self, subject: str, binder: str) -> InputAtom:
        return InputAtom(subject, binder)

    def joint(self, *args: Any) -> Config:
        *atoms, body = args
        if len(atoms) == 1:
            (atom,) = atoms
            if isinstance(atom, OutputAtom):
                return Msg(atom.subject, atom.obj, body)
            return Input(atom.subject, atom.binder, body)
        try:
            return StepPrefix(tuple(atoms), body)
        except ValueError as e:
            raise ParseError(str(e)) from e

    def branch(self, guard: str, body: Config) -> tuple[str, Config]:
        return (guard, body)

    def case(self, scrutinee: str, *branches: tuple[str, Config]) -> Config:
        return Case(scrutinee, tuple(branches))

    def inst(self, behavior: str, *lists: tuple[str, ...] | None) -> Config:
        actors, params = _split_lists(lists)
        return Inst(behavior, actors, params)

    def inst_actors(self, behavior: str, actors: tuple[str, ...] | None = None) -> Config:
        return Inst(behavior, actors or (), ())

    def definition(self, name: str, *rest: Any) -> BehaviorDef:
        *lists, body = rest
        actors, params = _split_lists(tuple(lists))
        return BehaviorDef(name, actors, params, body)

    def definition_actors(self, name: str, *rest: Any) -> BehaviorDef:
        *lists, body = rest
        actors = lists[0] if lists else ()
        return BehaviorDef(name, actors or (), (), body)

    def module(self, *items: Any) -> tuple[list[BehaviorDef], Config]:
        *defs, process = items
        return defs, process

    def definitions(self, *defs: BehaviorDef) -> list[BehaviorDef]:
        return list(defs)

    def binderset(self, names: tuple[str, ...] | None = None) -> frozenset[str]:
        return frozenset(names or ())

    def a_out(self, subject: str, obj: str) -> ActionLabel:
        return ActionLabel.out(subject, obj)

    def a_bout(self, subject: str, obj: str) -> ActionLabel:
        return ActionLabel.bout(subject, obj)

    def a_in(self, subject: str, obj: str) -> ActionLabel:
        return ActionLabel.inp(subject, obj)

    def a_bin(self, subject: str, obj: str) -> ActionLabel:
        return ActionLabel.binp(subject, obj)

    def a_tau(self) -> ActionLabel:
        return ActionLabel.tau()

    def item(self, *parts: Any) -> TraceItem:
        binders: frozenset[str] = frozenset()
        if parts and isinstance(parts[0], frozenset):
            binders, parts = parts[0], parts[1:]
        actions = []
        for a in parts:
            if a.kind is ActionKind.FREE_OUTPUT and a.obj in binders:
                a = ActionLabel.bout(a.subject, a.obj)
            elif a.kind is ActionKind.FREE_INPUT and a.obj in binders:
                a = ActionLabel.binp(a.subject, a.obj)
            actions.append(a)
        binders |= frozenset(a.obj for a in actions if a.is_bound)
        return TraceItem(binders, tuple(actions))

    # pattern extensions

    def meta(self, token: Token) -> MetaProc:
        return MetaProc(str(token))

    def subst(self, new: str, old: str) -> tuple[str, str]:
        return (new, old)

    def meta_subst(self, token: Token, *pairs: tuple[str, str]) -> MetaProc:
        return MetaProc(str(token), tuple(pairs))

    def splice(self, token: Token) -> MetaSplice:
        return MetaSplice(str(token))

    def single(self, body: Config) -> Config:
        return body

    def sum(self, *items: Any) -> MetaSum:
        return MetaSum(tuple(items))

    def meta_prefix(self, token: Token, body: Config) -> MetaPrefix:
        return MetaPrefix(str(token), body)

    def pattern(self, body: Config) -> Config:
        return body


def _split_lists(lists: tuple[Any, ...]) -> tuple[tuple[str, ...], tuple[str, ...]]:
    # Optional name lists arrive as ``None`` placeholders around the ';'.
    present = [x or () for x in lists]
    while len(present) < 2:
        present.append(())
    return tuple(present[0]), tuple(present[1])


def _run(text: str, start: str, allow_generated: bool = False, patterns: bool = False) -> Any:
    try:
        tree = _parser(patterns).parse(text, start=start)
    except UnexpectedInput as e:
        msg = f"syntax error: unexpected input {e.get_context(text).strip()!r}"
        raise ParseError(msg, e.line, e.column) from e
    try:
        return ConfigTransformer(allow_generated).transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, ApitcError):
            raise e.orig_exc from e
        raise


def build_definitions(defs: list[BehaviorDef]) -> dict[str, BehaviorDef]:
    """Validate parsed definitions and index them by name.

    Raises:
        DefinitionError: On duplicates, bad parameter lists or a body that
            does not start by receiving on the first actor parameter.
    """
    table: dict[str, BehaviorDef] = {}
    for d in defs:
        if d.name in table:
            msg = f"behaviour {d.name} defined twice"
            raise DefinitionError(msg)
        if not 1 <= len(d.actor_params) <= MAX_ACTOR_PARAMS:
            msg = f"behaviour {d.name} needs one or two actor parameters"
            raise DefinitionError(msg)
        if len(set(d.params)) != len(d.params):
            msg = f"behaviour {d.name} has repeated parameters"
            raise DefinitionError(msg)
        if not (isinstance(d.body, Input) and d.body.subject == d.actor_params[0]):
            msg = f"body of {d.name} must start with an input on {d.actor_params[0]}"
            raise DefinitionError(msg)
        table[d.name] = d
    for d in table.values():
        check_instances(d.body, table)
    return table


def check_instances(p: Config, defs: Definitions) -> None:
    """Check every behaviour instance in ``p`` against ``defs``.

    Raises:
        DefinitionError: For unknown behaviours or arity mismatches.
    """
    for sub in subterms(p):
        if not isinstance(sub, Inst):
            continue
        if len(sub.actors) > MAX_ACTOR_PARAMS:
            msg = f"{sub.behavior}: at most two actor names, got {len(sub.actors)}"
            raise DefinitionError(msg)
        d = defs.get(sub.behavior)
        if d is None:
            msg = f"undefined behaviour {sub.behavior}"
            raise DefinitionError(msg)
        if len(sub.actors) != len(d.actor_params) or len(sub.params) != len(d.value_params):
            msg = (
                f"{sub.behavior} expects {len(d.actor_params)} actor and "
                f"{len(d.value_params)} value arguments"
            )
            raise DefinitionError(msg)


def parse(text: str, defs: Definitions | None = None, *, allow_generated: bool = False) -> Config:
    """Parse a configuration.

    Args:
        text: Configuration source.
        defs: Behaviour definitions that instances may refer to.
        allow_generated: Accept primed names such as ``w'0`` (used when
            re-reading printed states).

    Returns:
        The configuration.

    Raises:
        ParseError: On syntax errors, with line and column.
        DefinitionError: On undefined behaviours or arity mismatches.
    """
    config: Config = _run(text, "process", allow_generated)
    check_instances(config, defs or {})
    return config


def parse_definitions(text: str) -> dict[str, BehaviorDef]:
    """Parse a block of ``def`` lines."""
    return build_definitions(_run(text, "definitions"))


def parse_module(text: str, *, allow_generated: bool = False) -> tuple[Config, dict[str, BehaviorDef]]:
    """Parse a file holding definitions followed by one configuration."""
    raw_defs, config = _run(text, "module", allow_generated)
    defs = build_definitions(raw_defs)
    check_instances(config, defs)
    logger.debug("Parsed module with %d definitions", len(defs))
    return config, defs


def parse_trace(text: str) -> tuple[TraceItem, ...]:
    """Parse a trace file: one item per non-empty line.

    Each line is ``[binders] action | action ...`` where actions are
    ``x!y``, ``x!(y)``, ``x?y``, ``x?(y)`` or ``tau``. An output or input
    whose object is listed in the binder set is recorded as bound.
    """
    items = []
    for line in text.splitlines():
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            items.append(_run(stripped, "item", allow_generated=True))
    return tuple(items)


def parse_pattern(text: str) -> Config:
    """Parse an axiom pattern (concrete syntax plus metavariables)."""
    return _run(text, "pattern", allow_generated=True, patterns=True)
