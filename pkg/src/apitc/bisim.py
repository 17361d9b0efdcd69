"""Truly concurrent bisimilarities decided on unfolded event structures.

Four equivalences are supported, each in a strong and a weak (tau
abstracting) variant:

* pomset: moves are arbitrary pomset transitions, matched up to labelled
  poset isomorphism;
* step: moves are sets of pairwise concurrent events;
* hp (history preserving): single-event moves, positions carry the
  isomorphism between the two histories;
* hhp (hereditary hp): hp plus backtracking of maximal events.

The game is played on the configurations of both structures. Moves that
send an output to a current receptionist (``rho`` plus every name
extruded so far) are not real computations and are skipped on both sides.
"""

from __future__ import annotations

import logging
from collections import deque
from collections.abc import Callable, Iterable, Iterator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from apitc.actions import ActionKind
from apitc.errors import BisimError
from apitc.events import (
    Configuration,
    Pes,
    Unfolding,
    enumerate_pomset_transitions,
    pomsets_isomorphic,
    unfold_to_pes,
)
from apitc.lts import Bounds, build_lts
from apitc.syntax import Config, Definitions, Name
from apitc.typesystem import typecheck

logger = logging.getLogger(__name__)


class EquivalenceKind(str, Enum):
    POMSET = "pomset"
    STEP = "step"
    HP = "hp"
    HHP = "hhp"


class Mode(str, Enum):
    STRONG = "strong"
    WEAK = "weak"


class Status(str, Enum):
    RELATED = "related"
    DISTINGUISHED = "distinguished"
    INCONCLUSIVE = "inconclusive"


HistoryMap = tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class Position:
    """A pair of configurations, with the history isomorphism for hp games."""

    left: Configuration
    right: Configuration
    mapping: HistoryMap = ()

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"left": sorted(self.left), "right": sorted(self.right)}
        if self.mapping:
            out["mapping"] = [list(pair) for pair in self.mapping]
        return out


@dataclass(frozen=True)
class WitnessMove:
    """One round of a distinguishing play.

    Attributes:
        side: ``"left"`` or ``"right"``: who challenges.
        challenge: The challenging move.
        response: The defender's best answer, ``None`` when there is none.
        position: Position the round is played from.
    """

    side: str
    challenge: str
    response: str | None
    position: Position

    def to_json(self) -> dict[str, Any]:
        return {
            "side": self.side,
            "challenge": self.challenge,
            "response": self.response,
            "position": self.position.to_json(),
        }


@dataclass
class Verdict:
    """Outcome of an equivalence check."""

    status: Status
    kind: EquivalenceKind
    mode: Mode
    rho: frozenset[Name]
    relation: frozenset[Position] = frozenset()
    witness: list[WitnessMove] = field(default_factory=list)
    truncated: bool = False
    positions: int = 0

    @property
    def related(self) -> bool:
        return self.status is Status.RELATED

    def to_json(self) -> dict[str, Any]:
        return {
            "status": self.status.value,
            "kind": self.kind.value,
            "mode": self.mode.value,
            "rho": sorted(self.rho),
            "truncated": self.truncated,
            "positions": self.positions,
            "relation_size": len(self.relation),
            "witness": [m.to_json() for m in self.witness],
        }


@dataclass
class _Challenge:
    side: int
    text: str
    responses: list[tuple[str | None, Position]]


def _exported(pes: Pes, events: Iterable[int]) -> set[Name]:
    out: set[Name] = set()
    for e in events:
        a = pes.label(e)
        if a.kind is ActionKind.BOUND_OUTPUT and a.obj:
            out.add(a.obj)
    return out


def _well_formed_move(pes: Pes, c: Configuration, x: frozenset[int], rho: frozenset[Name]) -> bool:
    rcp = set(rho) | _exported(pes, c) | _exported(pes, x)
    return not any(pes.label(e).is_output and pes.label(e).subject in rcp for e in x)


def _describe(pes: Pes, x: Iterable[int]) -> str:
    events = sorted(x)
    labels = ", ".join(str(pes.label(e)) for e in events)
    order = [f"{pes.label(a)}<{pes.label(b)}" for a in events for b in events if a != b and pes.leq(a, b)]
    return f"[{labels}]" + (f" with {', '.join(order)}" if order else "")


def _pairwise_concurrent(pes: Pes, x: frozenset[int], visible_only: bool) -> bool:
    events = [e for e in x if not (visible_only and pes.label(e).is_tau)]
    return all(pes.concurrent(a, b) for i, a in enumerate(events) for b in events[i + 1 :])


class _Game:
    def __init__(
        self, u1: Unfolding, u2: Unfolding, kind: EquivalenceKind, mode: Mode, rho: frozenset[Name]
    ) -> None:
        self.pes = (u1.pes, u2.pes)
        self.kind = kind
        self.weak = mode is Mode.WEAK
        self.rho = rho

    # Pomset and step games.

    def _moves(self, side: int, c: Configuration, *, challenger: bool) -> list[tuple[frozenset[int], Configuration]]:
        pes = self.pes[side]
        step = self.kind is EquivalenceKind.STEP
        out = []
        for x, bigger in enumerate_pomset_transitions(pes, c, step_only=step and not self.weak):
            if step and self.weak and not _pairwise_concurrent(pes, x, visible_only=True):
                continue
            if _well_formed_move(pes, c, x, self.rho):
                out.append((x, bigger))
        if self.weak and not challenger:
            out.append((frozenset(), c))
        return out

    def _configuration_challenges(self, pos: Position) -> list[_Challenge]:
        challenges = []
        configs = (pos.left, pos.right)
        for side in (0, 1):
            other = 1 - side
            replies = self._moves(other, configs[other], challenger=False)
            for x, bigger in self._moves(side, configs[side], challenger=True):
                responses = []
                for y, reply in replies:
                    if pomsets_isomorphic(self.pes[side], x, self.pes[other], y, visible_only=self.weak):
                        nxt = Position(bigger, reply) if side == 0 else Position(reply, bigger)
                        responses.append((_describe(self.pes[other], y), nxt))
                challenges.append(_Challenge(side, _describe(self.pes[side], x), responses))
        return challenges

    # History-preserving games.

    def _history_responses(
        self, side: int, pos: Position, e: int
    ) -> Iterator[tuple[frozenset[int], Configuration, dict[int, int]]]:
        other = 1 - side
        src, dst = self.pes[side], self.pes[other]
        theirs = pos.right if side == 0 else pos.left
        f = dict(pos.mapping) if side == 0 else {b: a for a, b in pos.mapping}
        label = src.label(e)
        if self.weak and label.is_tau:
            yield frozenset(), theirs, f
            candidates = enumerate_pomset_transitions(dst, theirs)
            for y, bigger in candidates:
                if all(dst.label(z).is_tau for z in y) and _well_formed_move(dst, theirs, y, self.rho):
                    yield y, bigger, f
            return
        if self.weak:
            candidates = enumerate_pomset_transitions(dst, theirs)
        else:
            candidates = ((frozenset({z}), theirs | {z}) for z in dst.enabled(theirs))  # type: ignore[assignment]
        for y, bigger in candidates:
            # Weak answers may wrap the matching event in taus.
            matched = [z for z in y if not (self.weak and dst.label(z).is_tau)]
            if len(matched) != 1:
                continue
            (z,) = matched
            if dst.label(z) != label or not _well_formed_move(dst, theirs, y, self.rho):
                continue
            if all(src.leq(a, e) == dst.leq(b, z) for a, b in f.items()):
                yield y, bigger, {**f, e: z}

    def _history_challenges(self, pos: Position) -> list[_Challenge]:
        challenges = []
        for side in (0, 1):
            pes = self.pes[side]
            mine = pos.left if side == 0 else pos.right
            for e in pes.enabled(mine):
                if not _well_formed_move(pes, mine, frozenset({e}), self.rho):
                    continue
                responses = []
                for y, bigger, f in self._history_responses(side, pos, e):
                    if side == 0:
                        nxt = Position(mine | {e}, bigger, tuple(sorted(f.items())))
                    else:
                        nxt = Position(bigger, mine | {e}, tuple(sorted((b, a) for a, b in f.items())))
                    responses.append((_describe(self.pes[1 - side], y), nxt))
                challenges.append(_Challenge(side, _describe(pes, {e}), responses))
        if self.kind is EquivalenceKind.HHP:
            challenges += self._backtracks(pos)
        return challenges

    def _backtracks(self, pos: Position) -> list[_Challenge]:
        out = []
        p1, p2 = self.pes
        for a, b in pos.mapping:
            if not _maximal(p1, pos.left, a) and not _maximal(p2, pos.right, b):
                continue
            responses: list[tuple[str | None, Position]] = []
            if _maximal(p1, pos.left, a) and _maximal(p2, pos.right, b):
                rest = tuple(pair for pair in pos.mapping if pair != (a, b))
                responses.append((f"undo {p2.label(b)}", Position(pos.left - {a}, pos.right - {b}, rest)))
            side = 0 if _maximal(p1, pos.left, a) else 1
            text = f"undo {p1.label(a)}" if side == 0 else f"undo {p2.label(b)}"
            out.append(_Challenge(side, text, responses))
        return out

    def challenges(self, pos: Position) -> list[_Challenge]:
        if self.kind in (EquivalenceKind.HP, EquivalenceKind.HHP):
            return self._history_challenges(pos)
        return self._configuration_challenges(pos)


def _maximal(pes: Pes, c: Configuration, e: int) -> bool:
    return not any(e in pes.events[x].causes for x in c if x != e)


def compute_relation(
    u1: Unfolding,
    u2: Unfolding,
    kind: EquivalenceKind = EquivalenceKind.STEP,
    mode: Mode = Mode.STRONG,
    rho: frozenset[Name] = frozenset(),
    *,
    max_positions: int = 20000,
) -> Verdict:
    """Play the equivalence game on two unfoldings.

    Every position reachable from the empty one is explored, then the
    greatest fixpoint is computed by repeatedly dropping positions with a
    challenge that has no surviving answer. Any truncation of either
    unfolding, or of the game itself, makes the verdict inconclusive.

    Raises:
        BisimError: If ``max_positions`` leaves no room for the start position.
    """
    if max_positions < 1:
        msg = "the game needs room for at least one position"
        raise BisimError(msg)
    game = _Game(u1, u2, kind, mode, rho)
    start = Position(frozenset(), frozenset())
    graph: dict[Position, list[_Challenge]] = {}
    queue = deque([start])
    truncated = u1.truncated or u2.truncated
    while queue:
        pos = queue.popleft()
        if pos in graph:
            continue
        if len(graph) >= max_positions:
            truncated = True
            break
        graph[pos] = game.challenges(pos)
        for ch in graph[pos]:
            queue.extend(nxt for _, nxt in ch.responses if nxt not in graph)
    if truncated and queue:
        # Unexplored positions stay in the relation.
        for pos in queue:
            graph.setdefault(pos, [])
    alive = set(graph)
    removed_at: dict[Position, int] = {}
    rounds = 0
    while True:
        rounds += 1
        doomed = [
            p
            for p in alive
            if any(all(nxt not in alive for _, nxt in ch.responses) for ch in graph[p])
        ]
        if not doomed:
            break
        for p in doomed:
            alive.discard(p)
            removed_at[p] = rounds
    logger.info(
        "%s %s game: %d positions, %d survive after %d rounds",
        mode.value,
        kind.value,
        len(graph),
        len(alive),
        rounds,
    )
    witness = _witness(graph, removed_at, start) if start in removed_at else []
    if truncated:
        status = Status.INCONCLUSIVE
    else:
        status = Status.RELATED if start in alive else Status.DISTINGUISHED
    return Verdict(status, kind, mode, rho, frozenset(alive), witness, truncated, len(graph))


def _witness(
    graph: dict[Position, list[_Challenge]], removed_at: dict[Position, int], start: Position
) -> list[WitnessMove]:
    moves = []
    pos = start
    while pos in removed_at:
        k = removed_at[pos]
        ch = next(
            c
            for c in graph[pos]
            if all(removed_at.get(nxt, k + 1) < k for _, nxt in c.responses)
        )
        side = "left" if ch.side == 0 else "right"
        if not ch.responses:
            moves.append(WitnessMove(side, ch.text, None, pos))
            break
        text, nxt = max(ch.responses, key=lambda r: removed_at[r[1]])
        moves.append(WitnessMove(side, ch.text, text, pos))
        pos = nxt
    return moves


def validate_relation(
    relation: Iterable[Position],
    u1: Unfolding,
    u2: Unfolding,
    kind: EquivalenceKind = EquivalenceKind.STEP,
    mode: Mode = Mode.STRONG,
    rho: frozenset[Name] = frozenset(),
) -> list[str]:
    """Re-check the transfer property of ``relation`` from scratch.

    Moves are recomputed with ``enumerate_pomset_transitions``; a move with
    a single event stands for the single-event moves of hp games.

    Returns:
        A description of every unanswered challenge (empty when valid).
    """
    rel = set(relation)
    weak = mode is Mode.WEAK
    history = kind in (EquivalenceKind.HP, EquivalenceKind.HHP)
    step = kind is EquivalenceKind.STEP
    sides = (u1.pes, u2.pes)
    problems = []

    def moves(pes: Pes, c: Configuration) -> list[tuple[frozenset[int], Configuration]]:
        out = [
            (x, b)
            for x, b in enumerate_pomset_transitions(pes, c)
            if _well_formed_move(pes, c, x, rho)
            and (not step or _pairwise_concurrent(pes, x, visible_only=weak))
        ]
        if weak:
            out.append((frozenset(), c))
        return out

    def answered(pos: Position, side: int, x: frozenset[int], bigger: Configuration) -> bool:
        other = 1 - side
        src, dst = sides[side], sides[other]
        theirs = pos.right if side == 0 else pos.left
        for y, reply in moves(dst, theirs):
            if not y and not weak:
                continue
            if history:
                f = dict(pos.mapping) if side == 0 else {b: a for a, b in pos.mapping}
                vis_x = [e for e in x if not (weak and src.label(e).is_tau)]
                vis_y = [e for e in y if not (weak and dst.label(e).is_tau)]
                if len(vis_x) != len(vis_y) or (not weak and len(y) != 1):
                    continue
                g = dict(f)
                if vis_x:
                    (e,), (z,) = vis_x, vis_y
                    if src.label(e) != dst.label(z):
                        continue
                    if not all(src.leq(a, e) == dst.leq(b, z) for a, b in f.items()):
                        continue
                    g[e] = z
                pairs = tuple(sorted(g.items())) if side == 0 else tuple(sorted((b, a) for a, b in g.items()))
                nxt = Position(bigger, reply, pairs) if side == 0 else Position(reply, bigger, pairs)
                if nxt in rel:
                    return True
                continue
            nxt = Position(bigger, reply) if side == 0 else Position(reply, bigger)
            if nxt in rel and pomsets_isomorphic(src, x, dst, y, visible_only=weak):
                return True
        return False

    for pos in rel:
        for side in (0, 1):
            mine = pos.left if side == 0 else pos.right
            for x, bigger in moves(sides[side], mine):
                if not x or (history and len(x) != 1):
                    continue
                if not answered(pos, side, x, bigger):
                    problems.append(f"{pos.to_json()}: move {_describe(sides[side], x)} is unanswered")
        if kind is EquivalenceKind.HHP:
            for a, b in pos.mapping:
                if _maximal(u1.pes, pos.left, a) != _maximal(u2.pes, pos.right, b):
                    problems.append(f"{pos.to_json()}: maximality of {a} and {b} differs")
                elif _maximal(u1.pes, pos.left, a):
                    back = Position(
                        pos.left - {a}, pos.right - {b}, tuple(p for p in pos.mapping if p != (a, b))
                    )
                    if back not in rel:
                        problems.append(f"{pos.to_json()}: undoing {a} leaves the relation")
    return problems


def shared_universe(bounds: Bounds, *terms: Config) -> frozenset[Name]:
    out: frozenset[Name] = frozenset()
    for t in terms:
        out |= bounds.universe_for(t)
    return out


def check_equivalence(
    p: Config,
    q: Config,
    kind: EquivalenceKind = EquivalenceKind.STEP,
    mode: Mode = Mode.STRONG,
    defs: Definitions | None = None,
    bounds: Bounds | None = None,
    rho: Iterable[Name] | None = None,
    *,
    on_unfold: Callable[[Unfolding, Unfolding], None] | None = None,
) -> Verdict:
    """Decide whether ``p`` and ``q`` are equivalent within ``bounds``.

    Args:
        p: Left configuration.
        q: Right configuration.
        kind: Which equivalence to play.
        mode: Strong, or weak (tau abstracting).
        defs: Behaviour definitions for both sides.
        bounds: Exploration bounds; both sides share one input universe.
        rho: Receptionists; defaults to the union of both sides' typed
            receptionists.
        on_unfold: Called with both unfoldings before the game starts.

    Raises:
        TypingError: If ``rho`` is omitted and a side is ill-typed.
    """
    bounds = bounds or Bounds()
    defs = defs or {}
    if rho is None:
        rho_set = typecheck(p, defs).receptionists | typecheck(q, defs).receptionists
    else:
        rho_set = frozenset(rho)
    universe = shared_universe(bounds, p, q)
    u1 = unfold_to_pes(build_lts(p, defs, bounds, universe), bounds.max_depth)
    u2 = unfold_to_pes(build_lts(q, defs, bounds, universe), bounds.max_depth)
    if on_unfold is not None:
        on_unfold(u1, u2)
    return compute_relation(u1, u2, EquivalenceKind(kind), Mode(mode), rho_set, max_positions=bounds.max_states)

