"""Configuration patterns with metavariables, used to state axioms.

A pattern is an ordinary configuration tree in which every name position
holds a name variable and which may additionally contain:

* ``MetaProc`` (``$P``, ``$P{y/z}``): a process variable, optionally under
  a renaming applied at instantiation.
* ``MetaSum`` (``sum{$G*, $P}``): an internal choice encoded as
  ``nu u. case u of { u: P1, ... }``; ``$G*`` splices a list variable.
* ``MetaPrefix`` (``@a.$P``): any prefix (output, input, tau, joint).
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, replace
from typing import Any

from apitc.syntax import (
    NIL,
    Case,
    Config,
    Inst,
    Input,
    InputAtom,
    Msg,
    Name,
    Nil,
    OutputAtom,
    Par,
    Restriction,
    StepPrefix,
    TauPrefix,
    alpha_eq,
    fresh_name,
    free_names,
    names,
    substitute,
)

Bindings = dict[str, Any]


@dataclass(frozen=True)
class MetaProc:
    """Process variable ``$name``, with renaming pairs ``(new, old)``."""

    name: str
    subst: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class MetaSplice:
    """List variable spliced into a sum."""

    name: str


@dataclass(frozen=True)
class MetaSum:
    """Internal choice over spliced lists and single branches."""

    items: tuple[Any, ...]


@dataclass(frozen=True)
class MetaPrefix:
    """Prefix variable ``@name`` guarding ``body``."""

    name: str
    body: Any


@dataclass(frozen=True)
class PrefixValue:
    """A matched prefix: the prefix node with its body cut off."""

    node: Config

    @property
    def names(self) -> frozenset[Name]:
        match self.node:
            case Msg(subject, obj, _) | Input(subject, obj, _):
                return frozenset({subject, obj})
            case StepPrefix(atoms, _):
                out: set[Name] = set()
                for a in atoms:
                    out |= {a.subject, a.obj if isinstance(a, OutputAtom) else a.binder}
                return frozenset(out)
        return frozenset()

    @property
    def binders(self) -> frozenset[Name]:
        match self.node:
            case Input(_, y, _):
                return frozenset({y})
            case StepPrefix():
                return frozenset(self.node.binders)
        return frozenset()

    def body_of(self, term: Config) -> Config:
        if isinstance(term, Msg):
            return term.cont if term.cont is not None else NIL
        return term.body  # type: ignore[union-attr]

    def rebuild(self, body: Config) -> Config:
        if isinstance(self.node, Msg):
            return replace(self.node, cont=body)
        return replace(self.node, body=body)  # type: ignore[call-arg]


def sum_branches(term: Config) -> list[Config] | None:
    """Decode an internal-choice encoding into its branches.

    Returns:
        The branch list, ``[]`` for ``0``, or ``None`` when ``term`` is not a
        sum encoding.
    """
    if isinstance(term, Nil):
        return []
    if not (isinstance(term, Restriction) and isinstance(term.body, Case)):
        return None
    u, case = term.binder, term.body
    if case.scrutinee != u or any(g != u for g, _ in case.branches):
        return None
    bodies = [b for _, b in case.branches]
    if any(u in free_names(b) for b in bodies):
        return None
    return bodies


def encode_sum(branches: list[Config], avoid: frozenset[Name] = frozenset()) -> Config:
    """Encode ``branches`` as ``nu u. case u of { u: P1, ... }`` with ``u`` fresh."""
    if not branches:
        return NIL
    used = set(avoid)
    for b in branches:
        used |= names(b)
    u = fresh_name("u", used)
    return Restriction(u, Case(u, tuple((u, b) for b in branches)))


def _bind_name(var: str, value: Name, b: Bindings) -> Bindings | None:
    current = b.get(var)
    if current is None:
        return {**b, var: value}
    return b if current == value else None


def _bind_names(pairs: list[tuple[str, Name]], b: Bindings) -> Bindings | None:
    out: Bindings | None = b
    for var, value in pairs:
        if out is None:
            return None
        out = _bind_name(var, value, out)
    return out


def match(pattern: Any, term: Config, b: Bindings | None = None) -> Iterator[Bindings]:
    """Yield every extension of ``b`` under which ``pattern`` matches ``term``.

    Patterns with a renamed process variable (``$P{y/z}``) cannot be matched
    and yield nothing.
    """
    b = {} if b is None else b
    match pattern:
        case MetaProc(name, subst):
            if subst:
                return
            if name in b:
                if alpha_eq(b[name], term):
                    yield b
                return
            yield {**b, name: term}
        case MetaSum(items):
            branches = sum_branches(term)
            if branches is not None:
                yield from _match_sum(list(items), branches, b)
        case MetaPrefix(name, body):
            if not isinstance(term, (Msg, Input, TauPrefix, StepPrefix)):
                return
            value = PrefixValue(_cut(term))
            if name in b and b[name] != value:
                return
            yield from match(body, value.body_of(term), {**b, name: value})
        case Nil():
            if isinstance(term, Nil):
                yield b
        case Msg(x, y, cont) if isinstance(term, Msg):
            nb = _bind_names([(x, term.subject), (y, term.obj)], b)
            if nb is None:
                return
            if cont is None:
                if term.cont is None:
                    yield nb
                return
            yield from match(cont, term.cont if term.cont is not None else NIL, nb)
        case Input(x, y, body) if isinstance(term, Input):
            nb = _bind_names([(x, term.subject), (y, term.binder)], b)
            if nb is not None:
                yield from match(body, term.body, nb)
        case Restriction(x, body) if isinstance(term, Restriction):
            nb = _bind_name(x, term.binder, b)
            if nb is not None:
                yield from match(body, term.body, nb)
        case TauPrefix(body) if isinstance(term, TauPrefix):
            yield from match(body, term.body, b)
        case Par(left, right) if isinstance(term, Par):
            for lb in match(left, term.left, b):
                yield from match(right, term.right, lb)
        case Case(x, branches) if isinstance(term, Case) and len(branches) == len(term.branches):
            nb = _bind_name(x, term.scrutinee, b)
            if nb is not None:
                yield from _match_branches(list(branches), list(term.branches), nb)
        case Inst(beh, actors, params) if (
            isinstance(term, Inst)
            and term.behavior == beh
            and len(actors) == len(term.actors)
            and len(params) == len(term.params)
        ):
            pairs = list(zip(actors + params, term.actors + term.params, strict=True))
            nb = _bind_names(pairs, b)
            if nb is not None:
                yield nb
        case StepPrefix(atoms, body) if isinstance(term, StepPrefix) and len(atoms) == len(term.atoms):
            pairs: list[tuple[str, Name]] = []
            for pa, ta in zip(atoms, term.atoms, strict=True):
                if type(pa) is not type(ta):
                    return
                second = (pa.obj, ta.obj) if isinstance(pa, OutputAtom) else (pa.binder, ta.binder)  # type: ignore[union-attr]
                pairs += [(pa.subject, ta.subject), second]
            nb = _bind_names(pairs, b)
            if nb is not None:
                yield from match(body, term.body, nb)


def _cut(term: Config) -> Config:
    if isinstance(term, Msg):
        return Msg(term.subject, term.obj)
    return replace(term, body=NIL)  # type: ignore[call-arg]


def _match_branches(
    pats: list[tuple[str, Any]], terms: list[tuple[Name, Config]], b: Bindings
) -> Iterator[Bindings]:
    if not pats:
        yield b
        return
    (pg, pb), (tg, tb) = pats[0], terms[0]
    nb = _bind_name(pg, tg, b)
    if nb is None:
        return
    for mb in match(pb, tb, nb):
        yield from _match_branches(pats[1:], terms[1:], mb)


def _match_sum(items: list[Any], branches: list[Config], b: Bindings) -> Iterator[Bindings]:
    if not items:
        if not branches:
            yield b
        return
    head, rest = items[0], items[1:]
    if isinstance(head, MetaSplice):
        if head.name in b:
            bound = b[head.name]
            k = len(bound)
            if k <= len(branches) and all(
                alpha_eq(x, y) for x, y in zip(bound, branches[:k], strict=False)
            ):
                yield from _match_sum(rest, branches[k:], b)
            return
        for k in range(len(branches) + 1):
            yield from _match_sum(rest, branches[k:], {**b, head.name: tuple(branches[:k])})
        return
    if branches:
        for mb in match(head, branches[0], b):
            yield from _match_sum(rest, branches[1:], mb)


def metavar_kinds(pattern: Any) -> dict[str, str]:
    """Map each metavariable of ``pattern`` to ``process``, ``list`` or ``prefix``."""
    out: dict[str, str] = {}
    match pattern:
        case MetaProc(name, _):
            out[name] = "process"
        case MetaSplice(name):
            out[name] = "list"
        case MetaSum(items):
            for item in items:
                out |= metavar_kinds(item)
        case MetaPrefix(name, body):
            out[name] = "prefix"
            out |= metavar_kinds(body)
        case Msg(_, _, cont) if cont is not None:
            out |= metavar_kinds(cont)
        case Input(_, _, body) | Restriction(_, body) | TauPrefix(body) | StepPrefix(_, body):
            out |= metavar_kinds(body)
        case Par(left, right):
            out |= metavar_kinds(left) | metavar_kinds(right)
        case Case(_, branches):
            for _, body in branches:
                out |= metavar_kinds(body)
    return out


def pattern_metavars(pattern: Any) -> set[str]:
    """Return the process, list and prefix variables occurring in ``pattern``."""
    return set(metavar_kinds(pattern))


def instantiate(pattern: Any, b: Bindings) -> Config:
    """Build the configuration denoted by ``pattern`` under bindings ``b``.

    Raises:
        KeyError: If a variable of the pattern is unbound.
    """

    def n(var: str) -> Name:
        return b[var]

    match pattern:
        case MetaProc(name, subst):
            value = b[name]
            return substitute(value, {n(old): n(new) for new, old in subst}) if subst else value
        case MetaSum(items):
            branches: list[Config] = []
            for item in items:
                if isinstance(item, MetaSplice):
                    branches.extend(b[item.name])
                else:
                    branches.append(instantiate(item, b))
            avoid = frozenset(v for v in b.values() if isinstance(v, str))
            return encode_sum(branches, avoid)
        case MetaPrefix(name, body):
            return b[name].rebuild(instantiate(body, b))
        case Nil():
            return NIL
        case Msg(x, y, cont):
            return Msg(n(x), n(y), instantiate(cont, b) if cont is not None else None)
        case Input(x, y, body):
            return Input(n(x), n(y), instantiate(body, b))
        case Restriction(x, body):
            return Restriction(n(x), instantiate(body, b))
        case TauPrefix(body):
            return TauPrefix(instantiate(body, b))
        case Par(left, right):
            return Par(instantiate(left, b), instantiate(right, b))
        case Case(x, branches):
            return Case(n(x), tuple((n(g), instantiate(p, b)) for g, p in branches))
        case Inst(beh, actors, params):
            return Inst(beh, tuple(map(n, actors)), tuple(map(n, params)))
        case StepPrefix(atoms, body):
            new_atoms = tuple(
                OutputAtom(n(a.subject), n(a.obj))
                if isinstance(a, OutputAtom)
                else InputAtom(n(a.subject), n(a.binder))
                for a in atoms
            )
            return StepPrefix(new_atoms, instantiate(body, b))
    msg = f"not a pattern: {pattern!r}"
    raise TypeError(msg)


def pattern_names(pattern: Any) -> set[str]:
    """Return the name variables occurring in ``pattern``."""
    out: set[str] = set()
    match pattern:
        case MetaProc(_, subst):
            for new, old in subst:
                out |= {new, old}
        case MetaSum(items):
            for item in items:
                out |= pattern_names(item)
        case MetaPrefix(_, body):
            out |= pattern_names(body)
        case Msg(x, y, cont):
            out |= {x, y}
            if cont is not None:
                out |= pattern_names(cont)
        case Input(x, y, body):
            out |= {x, y} | pattern_names(body)
        case Restriction(x, body):
            out |= {x} | pattern_names(body)
        case TauPrefix(body):
            out |= pattern_names(body)
        case Par(left, right):
            out |= pattern_names(left) | pattern_names(right)
        case Case(x, branches):
            out.add(x)
            for g, body in branches:
                out |= {g} | pattern_names(body)
        case Inst(_, actors, params):
            out |= set(actors) | set(params)
        case StepPrefix(atoms, body):
            for a in atoms:
                out |= {a.subject, a.obj if isinstance(a, OutputAtom) else a.binder}
            out |= pattern_names(body)
    return out
