"""Receptionist typing of configurations.

A judgement ``rho; f |- P`` records the receptionists ``rho`` of ``P`` (the
actors visible to the environment) and a temporary-name map ``f`` linking an
actor that is temporarily reachable under another name to that name.
``f(x) = y`` means ``x`` currently answers on ``y`` (and then ``f(y)`` is
``BOTTOM``); ``f(x) = STAR`` marks an ordinary actor.
"""

from __future__ import annotations

import logging
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field
from enum import Enum

from apitc.errors import DefinitionError, TempMapError, TypingError
from apitc.syntax import (
    Case,
    Config,
    Definitions,
    Inst,
    Input,
    InputAtom,
    Msg,
    Name,
    Nil,
    Par,
    Restriction,
    StepPrefix,
    TauPrefix,
    free_names,
    substitute,
)

logger = logging.getLogger(__name__)


class Mark(str, Enum):
    """Special values of a temporary-name map."""

    BOTTOM = "⊥"
    STAR = "*"


Target = Name | Mark


@dataclass(frozen=True)
class TempMap(Mapping[Name, Target]):
    """A finite temporary-name map.

    Invariants (checked on construction): ``f(x) != x``; ``f(x) = y`` with
    ``y`` a name implies ``f(y) = BOTTOM``; ``f`` is injective on names.
    """

    entries: tuple[tuple[Name, Target], ...] = ()
    _index: dict[Name, Target] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.entries, key=lambda kv: kv[0]))
        object.__setattr__(self, "entries", ordered)
        object.__setattr__(self, "_index", dict(ordered))
        if len(self._index) != len(ordered):
            msg = "temporary-name map has duplicate keys"
            raise TempMapError(msg)
        targets = [t for t in self._index.values() if not isinstance(t, Mark)]
        if len(set(targets)) != len(targets):
            msg = f"temporary-name map is not injective: {self}"
            raise TempMapError(msg)
        for x, t in self._index.items():
            if t == x:
                msg = f"temporary-name map sends {x} to itself"
                raise TempMapError(msg)
            if not isinstance(t, Mark) and self._index.get(t) is not Mark.BOTTOM:
                msg = f"temporary name {t} of {x} must map to {Mark.BOTTOM.value}"
                raise TempMapError(msg)

    @classmethod
    def of(cls, mapping: Mapping[Name, Target]) -> TempMap:
        return cls(tuple(mapping.items()))

    def __getitem__(self, key: Name) -> Target:
        return self._index[key]

    def __iter__(self) -> Iterator[Name]:
        return iter(self._index)

    def __len__(self) -> int:
        return len(self._index)

    def __str__(self) -> str:
        inner = ", ".join(f"{k}↦{v.value if isinstance(v, Mark) else v}" for k, v in self.entries)
        return "{" + inner + "}"

    def to_json(self) -> dict[str, str]:
        return {k: v.value if isinstance(v, Mark) else v for k, v in self.entries}


EMPTY_MAP = TempMap()


@dataclass(frozen=True)
class Judgement:
    """Result of typing: receptionists and temporary-name map."""

    receptionists: frozenset[Name]
    temp_map: TempMap

    def to_json(self) -> dict[str, object]:
        return {"rho": sorted(self.receptionists), "f": self.temp_map.to_json()}

    def __str__(self) -> str:
        return "rho = {" + ", ".join(sorted(self.receptionists)) + f"}}; f = {self.temp_map}"


def ch_map(names: tuple[Name | None, ...]) -> TempMap:
    """Build ``ch()`` for up to two names; ``None`` in front stands for epsilon.

    ``ch() = {}``, ``ch(x) = {x: *}``, ``ch(x, z) = {x: z, z: BOTTOM}`` and
    ``ch(epsilon, z) = {z: BOTTOM}``.
    """
    match names:
        case ():
            return EMPTY_MAP
        case (None, z) if z is not None:
            return TempMap.of({z: Mark.BOTTOM})
        case (x,) if x is not None:
            return TempMap.of({x: Mark.STAR})
        case (x, z) if x is not None and z is not None and x != z:
            return TempMap.of({x: z, z: Mark.BOTTOM})
    msg = f"ch() is undefined for {names}"
    raise TempMapError(msg)


def merge_temp_maps(f1: TempMap, f2: TempMap, rule: str = "COMP") -> TempMap:
    """Return ``f1 (+) f2``, the union of two compatible maps.

    Raises:
        TypingError: If the maps disagree on a shared name or their union
            breaks the map invariants.
    """
    merged: dict[Name, Target] = dict(f1)
    for k, v in f2.items():
        if k in merged and merged[k] != v:
            msg = f"temporary-name maps disagree on {k}"
            raise TypingError(rule, msg)
        merged[k] = v
    try:
        return TempMap.of(merged)
    except TempMapError as e:
        raise TypingError(rule, str(e)) from e


def restrict_temp_map(f: TempMap, rho: frozenset[Name]) -> TempMap:
    """Return ``f|rho``: entries for ``rho`` only.

    A temporary name that leaves ``rho`` no longer links its actor, which
    falls back to ``STAR``.
    """
    out: dict[Name, Target] = {}
    for k, v in f.items():
        if k not in rho:
            continue
        out[k] = v if isinstance(v, Mark) or v in rho else Mark.STAR
    return TempMap.of(out)


def typecheck(p: Config, defs: Definitions | None = None) -> Judgement:
    """Derive the typing judgement of ``p``.

    Args:
        p: Configuration to type.
        defs: Behaviour definitions for instances in ``p``.

    Returns:
        The unique judgement ``(rho, f)``.

    Raises:
        TypingError: Naming the first rule whose premise fails.
    """
    return _type(p, defs or {})


def _type(p: Config, defs: Definitions) -> Judgement:
    match p:
        case Nil():
            return Judgement(frozenset(), EMPTY_MAP)
        case Msg(_, _, cont):
            return _type(cont, defs) if cont is not None else Judgement(frozenset(), EMPTY_MAP)
        case TauPrefix(body):
            return _type(body, defs)
        case Input(x, y, body):
            return _act(x, y, _type(body, defs))
        case Restriction(x, body):
            j = _type(body, defs)
            rho = j.receptionists - {x}
            return Judgement(rho, restrict_temp_map(j.temp_map, rho))
        case Case(_, branches):
            rho: frozenset[Name] = frozenset()
            f = EMPTY_MAP
            for _, body in branches:
                j = _type(body, defs)
                rho |= j.receptionists
                f = merge_temp_maps(f, j.temp_map, "CASE")
            return Judgement(rho, f)
        case Par(left, right):
            j1, j2 = _type(left, defs), _type(right, defs)
            shared = j1.receptionists & j2.receptionists
            if shared:
                msg = f"receptionists {sorted(shared)} appear on both sides of |"
                raise TypingError("COMP", msg)
            return Judgement(
                j1.receptionists | j2.receptionists,
                merge_temp_maps(j1.temp_map, j2.temp_map, "COMP"),
            )
        case Inst(behavior, actors, _):
            if defs and behavior not in defs:
                msg = f"undefined behaviour {behavior}"
                raise DefinitionError(msg)
            if len(set(actors)) != len(actors) or not 1 <= len(actors) <= 2:
                msg = f"{behavior} needs one or two distinct actor names, got {list(actors)}"
                raise TypingError("INST", msg)
            try:
                return Judgement(frozenset(actors), ch_map(actors))
            except TempMapError as e:
                raise TypingError("INST", str(e)) from e
        case StepPrefix():
            return _step(p, defs)
    msg = f"not a configuration: {p!r}"
    raise TypeError(msg)


def _act(x: Name, y: Name, j: Judgement) -> Judgement:
    rho, f = j.receptionists, j.temp_map
    rest = rho - {x}
    if len(rest) > 1:
        msg = f"after receiving on {x} the body may introduce at most one name, got {sorted(rest)}"
        raise TypingError("ACT", msg)
    if y in rho:
        msg = f"received name {y} cannot be a receptionist of the body"
        raise TypingError("ACT", msg)
    z = next(iter(rest)) if rest else None
    try:
        expected = ch_map((x, z) if z else (x,)) if x in rho else ch_map((None, z) if z else ())
    except TempMapError as e:
        raise TypingError("ACT", str(e)) from e
    if f != expected:
        msg = f"body map {f} should be {expected}"
        raise TypingError("ACT", msg)
    result = ch_map((x, z) if z else (x,))
    return Judgement(frozenset({x}) | rest, result)


def _step(p: StepPrefix, defs: Definitions) -> Judgement:
    # Inputs of a joint prefix act as one actor step each; outputs add nothing.
    j = _type(p.body, defs)
    subjects = [a.subject for a in p.atoms if isinstance(a, InputAtom)]
    if len(set(subjects)) != len(subjects):
        msg = f"joint prefix receives twice on the same actor: {subjects}"
        raise TypingError("STEP", msg)
    if set(p.binders) & j.receptionists:
        msg = "received names cannot be receptionists of the body"
        raise TypingError("STEP", msg)
    rest = j.receptionists - set(subjects)
    f = merge_temp_maps(
        TempMap.of(dict.fromkeys(subjects, Mark.STAR)),
        restrict_temp_map(j.temp_map, rest),
        "STEP",
    )
    return Judgement(frozenset(subjects) | rest, f)


def check_definitions(defs: Definitions) -> dict[str, Judgement]:
    """Typecheck every behaviour body against its actor parameters.

    The body of ``def B(x1, x2; ...)`` must have judgement
    ``({x1, x2}, ch(x1, x2))``.

    Raises:
        TypingError: With rule ``DEF`` when a body does not match.
    """
    out = {}
    for d in defs.values():
        j = typecheck(d.body, defs)
        expected = Judgement(frozenset(d.actor_params), ch_map(d.actor_params))
        if j != expected:
            msg = f"body of {d.name} types as {j.receptionists}; {j.temp_map}"
            raise TypingError("DEF", msg)
        out[d.name] = j
    return out


@dataclass
class TheoremReport:
    """Outcome of checking the typing theorem on one configuration.

    Attributes:
        judgement: The derived judgement.
        clauses: Clause name to verdict.
    """

    judgement: Judgement
    clauses: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.clauses.values())


def check_typing_theorem(p: Config, defs: Definitions | None = None) -> TheoremReport:
    """Check the typing theorem's clauses on ``p``'s judgement.

    Clauses: receptionists are free names; the map is irreflexive; a
    temporary target maps to ``BOTTOM``; the map is injective on names;
    re-deriving gives the same judgement.
    """
    j = typecheck(p, defs)
    f = j.temp_map
    named = [t for t in f.values() if not isinstance(t, Mark)]
    clauses = {
        "receptionists_are_free": j.receptionists <= free_names(p),
        "map_irreflexive": all(f[k] != k for k in f),
        "targets_are_bottom": all(f.get(t) is Mark.BOTTOM for t in named),
        "map_injective": len(set(named)) == len(named),
        "judgement_unique": typecheck(p, defs) == j,
    }
    return TheoremReport(j, clauses)


def check_alpha_respect(p: Config, sigma: Mapping[Name, Name], defs: Definitions | None = None) -> bool:
    """Return whether typing commutes with the one-to-one renaming ``sigma``."""
    j = typecheck(p, defs)
    renamed = typecheck(substitute(p, sigma), defs)

    def s(n: Name) -> Name:
        return sigma.get(n, n)

    expected = Judgement(
        frozenset(map(s, j.receptionists)),
        TempMap.of({s(k): v if isinstance(v, Mark) else s(v) for k, v in j.temp_map.items()}),
    )
    return renamed == expected

