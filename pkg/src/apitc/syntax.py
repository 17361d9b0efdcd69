"""Abstract syntax of actor configurations and the operations on it.

Configurations are immutable trees of frozen dataclasses, so they can be
hashed and used directly as state keys once canonicalized. Names are plain
strings. Names created by the workbench (fresh binders, input witnesses)
carry a prime suffix such as ``w'0`` which the source grammar never
produces, keeping them apart from every name written by a user.

Example:
    Canonical forms identify alpha-equivalent configurations::

        >>> from apitc.parser import parse
        >>> alpha_eq(parse("x?(u).u!u"), parse("x?(v).v!v"))
        True
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from functools import lru_cache

Name = str

GENERATED_MARK = "'"
CANONICAL_STEM = "b"


@dataclass(frozen=True)
class Nil:
    """The inactive configuration ``0``."""


@dataclass(frozen=True)
class Msg:
    """A message ``subject!obj`` with an optional continuation.

    A continuation equal to ``0`` is dropped so that ``x!y.0`` and ``x!y``
    are the same term.
    """

    subject: Name
    obj: Name
    cont: Config | None = None

    def __post_init__(self) -> None:
        if isinstance(self.cont, Nil):
            object.__setattr__(self, "cont", None)


@dataclass(frozen=True)
class Input:
    """Actor input ``subject?(binder).body``; ``binder`` is bound in ``body``."""

    subject: Name
    binder: Name
    body: Config


@dataclass(frozen=True)
class Restriction:
    """Name restriction ``nu binder. body``."""

    binder: Name
    body: Config


@dataclass(frozen=True)
class Case:
    """Guarded choice ``case scrutinee of { guard: body, ... }``."""

    scrutinee: Name
    branches: tuple[tuple[Name, Config], ...]


@dataclass(frozen=True)
class Par:
    """Parallel composition ``left | right``."""

    left: Config
    right: Config


@dataclass(frozen=True)
class Inst:
    """Behaviour instantiation ``B<actors; params>``."""

    behavior: str
    actors: tuple[Name, ...]
    params: tuple[Name, ...] = ()


@dataclass(frozen=True)
class TauPrefix:
    """Silent prefix ``tau.body``."""

    body: Config


@dataclass(frozen=True)
class OutputAtom:
    """Output component ``subject!obj`` of a joint prefix."""

    subject: Name
    obj: Name


@dataclass(frozen=True)
class InputAtom:
    """Input component ``subject?(binder)`` of a joint prefix."""

    subject: Name
    binder: Name


Atom = OutputAtom | InputAtom


@dataclass(frozen=True)
class StepPrefix:
    """Joint prefix ``(a1 & ... & an).body`` performing all atoms in one step."""

    atoms: tuple[Atom, ...]
    body: Config

    def __post_init__(self) -> None:
        if not self.atoms:
            msg = "a joint prefix needs at least one atom"
            raise ValueError(msg)
        binders = [a.binder for a in self.atoms if isinstance(a, InputAtom)]
        if len(set(binders)) != len(binders):
            msg = f"joint prefix binders must be distinct: {binders}"
            raise ValueError(msg)

    @property
    def binders(self) -> tuple[Name, ...]:
        """Input binders of the prefix, in order."""
        return tuple(a.binder for a in self.atoms if isinstance(a, InputAtom))


Config = Nil | Msg | Input | Restriction | Case | Par | Inst | TauPrefix | StepPrefix

NIL = Nil()


@dataclass(frozen=True)
class BehaviorDef:
    """Definition ``def B(actors; params) = body``.

    Attributes:
        name: Behaviour identifier.
        actor_params: One or two actor parameters; the first is the actor
            the body starts by receiving on.
        value_params: Ordinary parameters.
        body: Body configuration, an ``Input`` on ``actor_params[0]``.
    """

    name: str
    actor_params: tuple[Name, ...]
    value_params: tuple[Name, ...]
    body: Config

    @property
    def params(self) -> tuple[Name, ...]:
        """All formal parameters, actors first."""
        return self.actor_params + self.value_params

    def __str__(self) -> str:
        values = f"; {', '.join(self.value_params)}" if self.value_params else ""
        return f"def {self.name}({', '.join(self.actor_params)}{values}) = {pretty_print(self.body)}"


Definitions = Mapping[str, BehaviorDef]


def is_generated(name: Name) -> bool:
    """Return whether a name was created by the workbench rather than parsed."""
    return GENERATED_MARK in name


def fresh_name(base: Name, avoid: frozenset[Name] | set[Name]) -> Name:
    """Return the first generated variant of ``base`` not in ``avoid``."""
    stem = base.split(GENERATED_MARK, 1)[0]
    i = 0
    while f"{stem}{GENERATED_MARK}{i}" in avoid:
        i += 1
    return f"{stem}{GENERATED_MARK}{i}"


@lru_cache(maxsize=65536)
def free_names(p: Config) -> frozenset[Name]:
    """Return the free names of a configuration.

    The scrutinee and guards of a ``case`` count as free occurrences, as
    substitution rewrites them.
    """
    match p:
        case Nil():
            return frozenset()
        case Msg(subject, obj, cont):
            rest = free_names(cont) if cont is not None else frozenset()
            return rest | {subject, obj}
        case Input(subject, binder, body):
            return (free_names(body) - {binder}) | {subject}
        case Restriction(binder, body):
            return free_names(body) - {binder}
        case Case(scrutinee, branches):
            out = {scrutinee}
            for guard, body in branches:
                out.add(guard)
                out |= free_names(body)
            return frozenset(out)
        case Par(left, right):
            return free_names(left) | free_names(right)
        case Inst(_, actors, params):
            return frozenset(actors) | frozenset(params)
        case TauPrefix(body):
            return free_names(body)
        case StepPrefix(atoms, body):
            out = set(free_names(body) - set(p.binders))
            for atom in atoms:
                out.add(atom.subject)
                if isinstance(atom, OutputAtom):
                    out.add(atom.obj)
            return frozenset(out)
    msg = f"not a configuration: {p!r}"
    raise TypeError(msg)


@lru_cache(maxsize=65536)
def names(p: Config) -> frozenset[Name]:
    """Return every name occurring in ``p``, binders included."""
    match p:
        case Input(_, binder, body) | Restriction(binder, body):
            return free_names(p) | names(body) | {binder}
        case Msg(_, _, cont) if cont is not None:
            return free_names(p) | names(cont)
        case Case(_, branches):
            out = set(free_names(p))
            for _, body in branches:
                out |= names(body)
            return frozenset(out)
        case Par(left, right):
            return names(left) | names(right)
        case TauPrefix(body):
            return names(body)
        case StepPrefix(_, body):
            return free_names(p) | names(body) | set(p.binders)
    return free_names(p)


def bound_names(p: Config) -> frozenset[Name]:
    """Return the names of ``p`` that occur only bound."""
    return names(p) - free_names(p)


def _freshen_binders(
    binders: tuple[Name, ...], body: Config, sigma: Mapping[Name, Name]
) -> tuple[tuple[Name, ...], dict[Name, Name]]:
    inner = {k: v for k, v in sigma.items() if k not in binders}
    clash = set(sigma) | set(sigma.values())
    avoid = set(names(body)) | clash | set(binders)
    chosen: list[Name] = []
    for b in binders:
        if b in clash:
            new = fresh_name(b, avoid)
            avoid.add(new)
            inner[b] = new
            chosen.append(new)
        else:
            chosen.append(b)
    return tuple(chosen), inner


def substitute(p: Config, sigma: Mapping[Name, Name]) -> Config:
    """Apply a simultaneous, capture-avoiding renaming ``sigma`` to ``p``.

    A binder found in the domain or range of ``sigma`` is first renamed to a
    fresh generated name.
    """
    sigma = {k: v for k, v in sigma.items() if k != v}
    if not sigma:
        return p
    return _subst(p, sigma)


def _subst(p: Config, sigma: Mapping[Name, Name]) -> Config:
    def s(n: Name) -> Name:
        return sigma.get(n, n)

    match p:
        case Nil():
            return p
        case Msg(subject, obj, cont):
            return Msg(s(subject), s(obj), substitute(cont, sigma) if cont else None)
        case Input(subject, binder, body):
            (b,), inner = _freshen_binders((binder,), body, sigma)
            return Input(s(subject), b, substitute(body, inner))
        case Restriction(binder, body):
            (b,), inner = _freshen_binders((binder,), body, sigma)
            return Restriction(b, substitute(body, inner))
        case Case(scrutinee, branches):
            return Case(
                s(scrutinee),
                tuple((s(g), substitute(body, sigma)) for g, body in branches),
            )
        case Par(left, right):
            return Par(substitute(left, sigma), substitute(right, sigma))
        case Inst(behavior, actors, params):
            return Inst(behavior, tuple(map(s, actors)), tuple(map(s, params)))
        case TauPrefix(body):
            return TauPrefix(substitute(body, sigma))
        case StepPrefix(atoms, body):
            chosen, inner = _freshen_binders(p.binders, body, sigma)
            renamed = iter(chosen)
            new_atoms: list[Atom] = []
            for atom in atoms:
                if isinstance(atom, OutputAtom):
                    new_atoms.append(OutputAtom(s(atom.subject), s(atom.obj)))
                else:
                    new_atoms.append(InputAtom(s(atom.subject), next(renamed)))
            return StepPrefix(tuple(new_atoms), substitute(body, inner))
    msg = f"not a configuration: {p!r}"
    raise TypeError(msg)


class _CanonicalNames:
    """Binder names by nesting level, skipping a term's free names."""

    def __init__(self, avoid: frozenset[Name]):
        self._avoid = avoid
        self._names: list[Name] = []
        self._next = 0

    def __getitem__(self, level: int) -> Name:
        while len(self._names) <= level:
            candidate = f"{CANONICAL_STEM}{GENERATED_MARK}{self._next}"
            self._next += 1
            if candidate not in self._avoid:
                self._names.append(candidate)
        return self._names[level]


@lru_cache(maxsize=65536)
def canonicalize(p: Config) -> Config:
    """Return the canonical representative of the alpha class of ``p``.

    Each binder is renamed after its nesting depth, using the generated
    names ``b'0, b'1, ...`` that are not free in ``p``.
    """
    pool = _CanonicalNames(free_names(p))
    return _canon(p, {}, 0, pool)


def _canon(p: Config, env: dict[Name, Name], level: int, pool: _CanonicalNames) -> Config:
    def r(n: Name) -> Name:
        return env.get(n, n)

    match p:
        case Nil():
            return p
        case Msg(subject, obj, cont):
            return Msg(r(subject), r(obj), _canon(cont, env, level, pool) if cont else None)
        case Input(subject, binder, body):
            new = pool[level]
            return Input(r(subject), new, _canon(body, {**env, binder: new}, level + 1, pool))
        case Restriction(binder, body):
            new = pool[level]
            return Restriction(new, _canon(body, {**env, binder: new}, level + 1, pool))
        case Case(scrutinee, branches):
            return Case(
                r(scrutinee),
                tuple((r(g), _canon(body, env, level, pool)) for g, body in branches),
            )
        case Par(left, right):
            return Par(_canon(left, env, level, pool), _canon(right, env, level, pool))
        case Inst(behavior, actors, params):
            return Inst(behavior, tuple(map(r, actors)), tuple(map(r, params)))
        case TauPrefix(body):
            return TauPrefix(_canon(body, env, level, pool))
        case StepPrefix(atoms, body):
            inner = dict(env)
            new_atoms: list[Atom] = []
            for atom in atoms:
                if isinstance(atom, OutputAtom):
                    new_atoms.append(OutputAtom(r(atom.subject), r(atom.obj)))
                else:
                    new = pool[level]
                    level += 1
                    inner[atom.binder] = new
                    new_atoms.append(InputAtom(r(atom.subject), new))
            return StepPrefix(tuple(new_atoms), _canon(body, inner, level, pool))
    msg = f"not a configuration: {p!r}"
    raise TypeError(msg)


def alpha_eq(p: Config, q: Config) -> bool:
    """Return whether ``p`` and ``q`` differ only in bound names."""
    return canonicalize(p) == canonicalize(q)


def par_components(p: Config) -> list[Config]:
    """Flatten nested parallel composition into its components."""
    if isinstance(p, Par):
        return par_components(p.left) + par_components(p.right)
    return [p]


def par_of(components: list[Config]) -> Config:
    """Rebuild a left-associated parallel composition; empty gives ``0``."""
    if not components:
        return NIL
    out = components[0]
    for c in components[1:]:
        out = Par(out, c)
    return out


def subterms(p: Config) -> Iterator[Config]:
    """Yield ``p`` and every configuration nested in it, pre-order."""
    yield p
    match p:
        case Msg(_, _, cont) if cont is not None:
            yield from subterms(cont)
        case Input(_, _, body) | Restriction(_, body) | TauPrefix(body) | StepPrefix(_, body):
            yield from subterms(body)
        case Case(_, branches):
            for _, body in branches:
                yield from subterms(body)
        case Par(left, right):
            yield from subterms(left)
            yield from subterms(right)


def ac_normalize(p: Config) -> Config:
    """Sort parallel components by printed canonical form, recursively."""
    match p:
        case Par():
            parts = [ac_normalize(c) for c in par_components(p)]
            parts.sort(key=lambda c: pretty_print(canonicalize(c)))
            return par_of(parts)
        case Msg(subject, obj, cont) if cont is not None:
            return Msg(subject, obj, ac_normalize(cont))
        case Input(subject, binder, body):
            return Input(subject, binder, ac_normalize(body))
        case Restriction(binder, body):
            return Restriction(binder, ac_normalize(body))
        case Case(scrutinee, branches):
            return Case(scrutinee, tuple((g, ac_normalize(b)) for g, b in branches))
        case TauPrefix(body):
            return TauPrefix(ac_normalize(body))
        case StepPrefix(atoms, body):
            return StepPrefix(atoms, ac_normalize(body))
    return p


def _atom_text(atom: Atom) -> str:
    if isinstance(atom, OutputAtom):
        return f"{atom.subject}!{atom.obj}"
    return f"{atom.subject}?({atom.binder})"


def _guarded(p: Config) -> str:
    text = pretty_print(p)
    return f"({text})" if isinstance(p, Par) else text


def pretty_print(p: Config) -> str:
    """Render ``p`` in the concrete syntax accepted by the parser."""
    match p:
        case Nil():
            return "0"
        case Msg(subject, obj, cont):
            head = f"{subject}!{obj}"
            return f"{head}.{_guarded(cont)}" if cont is not None else head
        case Input(subject, binder, body):
            return f"{subject}?({binder}).{_guarded(body)}"
        case Restriction(binder, body):
            return f"nu {binder}. {_guarded(body)}"
        case Case(scrutinee, branches):
            arms = ", ".join(f"{g}: {pretty_print(b)}" for g, b in branches)
            return f"case {scrutinee} of {{ {arms} }}"
        case Par(left, right):
            return f"{pretty_print(left)} | {_guarded(right)}"
        case Inst(behavior, actors, params):
            args = ", ".join(actors) + ";"
            if params:
                args += " " + ", ".join(params)
            return f"{behavior}<{args}>"
        case TauPrefix(body):
            return f"tau.{_guarded(body)}"
        case StepPrefix(atoms, body):
            return f"({' & '.join(map(_atom_text, atoms))}).{_guarded(body)}"
    msg = f"not a configuration: {p!r}"
    raise TypeError(msg)
