"""Seeded random configurations for the law harness and corpus tests."""

from __future__ import annotations

import logging
import random
from collections.abc import Sequence

from apitc.errors import ApitcError, TypingError
from apitc.syntax import (
    NIL,
    Case,
    Config,
    Input,
    InputAtom,
    Msg,
    Name,
    OutputAtom,
    Par,
    Restriction,
    StepPrefix,
    TauPrefix,
)
from apitc.typesystem import typecheck

logger = logging.getLogger(__name__)

DEFAULT_NAMES: tuple[Name, ...] = ("a", "b", "c", "d")

# Relative weights; leaves dominate so terms stay small.
_WEIGHTS = {
    "nil": 4,
    "msg": 4,
    "msg_then": 1,
    "input": 4,
    "restriction": 1,
    "par": 2,
    "tau": 1,
    "case": 1,
    "joint": 1,
}


def random_prefix(rng: random.Random, names: Sequence[Name], body: Config) -> Config:
    """Guard ``body`` with a random output, input, tau or joint prefix."""
    x, y = rng.choice(names), rng.choice(names)
    match rng.randrange(4):
        case 0:
            return Msg(x, y, body)
        case 1:
            return Input(x, y, body)
        case 2:
            return TauPrefix(body)
    u = rng.choice([n for n in names if n != y] or names)
    return StepPrefix((OutputAtom(u, rng.choice(names)), InputAtom(x, y)), body)


def random_term(rng: random.Random, depth: int = 3, names: Sequence[Name] = DEFAULT_NAMES) -> Config:
    """Draw a configuration of at most ``depth`` nested constructors.

    The result contains no behaviour instances and may be ill-typed.
    """
    if depth <= 0:
        return NIL if rng.random() < 0.5 else Msg(rng.choice(names), rng.choice(names))
    kinds = list(_WEIGHTS)
    kind = rng.choices(kinds, weights=[_WEIGHTS[k] for k in kinds])[0]

    def sub() -> Config:
        return random_term(rng, rng.randrange(depth), names)

    x, y = rng.choice(names), rng.choice(names)
    match kind:
        case "nil":
            return NIL
        case "msg":
            return Msg(x, y)
        case "msg_then":
            return Msg(x, y, sub())
        case "input":
            return Input(x, y, sub())
        case "restriction":
            return Restriction(x, sub())
        case "par":
            return Par(sub(), sub())
        case "tau":
            return TauPrefix(sub())
        case "case":
            return Case(x, ((x, sub()), (y, sub())))
    return random_prefix(rng, names, sub())


def random_well_typed(
    rng: random.Random,
    depth: int = 3,
    names: Sequence[Name] = DEFAULT_NAMES,
    attempts: int = 500,
) -> Config:
    """Draw terms until one typechecks.

    Raises:
        ApitcError: If no well-typed term turns up within ``attempts``.
    """
    for _ in range(attempts):
        p = random_term(rng, depth, names)
        try:
            typecheck(p)
        except TypingError:
            continue
        return p
    msg = f"no well-typed term of depth {depth} found in {attempts} attempts"
    raise ApitcError(msg)


def random_renaming(
    rng: random.Random, names: Sequence[Name] = DEFAULT_NAMES, pool: Sequence[Name] = ("e", "f", "g", "h")
) -> dict[Name, Name]:
    """Return a one-to-one renaming of ``names`` into ``names`` plus ``pool``."""
    targets = list(dict.fromkeys([*names, *pool]))
    rng.shuffle(targets)
    return dict(zip(names, targets[: len(names)], strict=True))
