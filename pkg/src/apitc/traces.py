"""Traces, receptionist evolution, run projection and fair simulation.

A trace is a sequence of items, each item being the actions of one step
plus the names it binds. Only traces in which no output targets a current
receptionist (an actor of the system itself) describe real computations;
``check_well_formed`` decides this.
"""

from __future__ import annotations

import logging
import random
from collections import defaultdict
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from typing import Any

from apitc.actions import ActionKind, ActionLabel, StepLabel, Trace, TraceItem
from apitc.errors import ProjectionError
from apitc.lts import Lts, Transition, derive_transitions
from apitc.syntax import (
    Config,
    Definitions,
    Msg,
    Name,
    Par,
    Restriction,
    canonicalize,
    pretty_print,
)

logger = logging.getLogger(__name__)


def rcp_extend(rho: frozenset[Name] | set[Name], trace: Sequence[TraceItem]) -> frozenset[Name]:
    """Return the receptionists after ``trace``: ``rho`` plus every exported binder."""
    out = set(rho)
    for item in trace:
        out |= item.exported
    return frozenset(out)


@dataclass(frozen=True)
class WellFormedness:
    """Verdict of ``check_well_formed``.

    Attributes:
        ok: Whether the trace is well formed.
        index: Index of the first offending item.
        reason: Why that item is rejected.
    """

    ok: bool
    index: int | None = None
    reason: str | None = None

    def to_json(self) -> dict[str, Any]:
        return {"well_formed": self.ok, "index": self.index, "reason": self.reason}


def check_well_formed(rho: frozenset[Name] | set[Name], trace: Sequence[TraceItem]) -> WellFormedness:
    """Check a trace against the receptionist set ``rho``.

    An item is rejected when one of its outputs is addressed to a
    receptionist, or else when one of its binders is not fresh (it occurs in
    ``rho``, earlier items, or free in the item itself). Receptionists for
    an item are those before it plus the binders the item itself exports.
    """
    seen = set(rho)
    current = set(rho)
    for i, item in enumerate(trace):
        allowed = current | item.exported
        for a in item.actions:
            if a.is_output and a.subject in allowed:
                return WellFormedness(False, i, f"output {a} targets receptionist {a.subject}")
        free_here: set[Name] = set()
        for a in item.actions:
            free_here |= a.free_names
        stale = item.binders & (seen | free_here)
        if stale:
            return WellFormedness(False, i, f"binder {sorted(stale)[0]} is not fresh")
        current |= item.exported
        seen |= item.names
    return WellFormedness(True)


@dataclass
class RunStep:
    """One executed step of a run."""

    label: StepLabel
    target: Config
    rule: str = ""
    delivered: list[str] = field(default_factory=list)


@dataclass
class RunLog:
    """A finite run from ``initial``.

    Attributes:
        initial: Canonical starting configuration.
        steps: The executed steps.
        defs: Definitions used to derive the steps.
        universe: Extra input objects used to derive the steps.
        deliveries: Message occurrence id to the index of the step that
            delivered it, ``None`` if never delivered.
        stopped: ``"deadlock"`` or ``"max_steps"``.
        seed: Scheduler seed (simulation only).
    """

    initial: Config
    steps: list[RunStep] = field(default_factory=list)
    defs: Definitions = field(default_factory=dict)
    universe: frozenset[Name] = frozenset()
    deliveries: dict[str, int | None] = field(default_factory=dict)
    stopped: str = "max_steps"
    seed: int | None = None

    @property
    def states(self) -> list[Config]:
        return [self.initial, *(s.target for s in self.steps)]

    @property
    def trace(self) -> Trace:
        """Visible items of the run; tau steps are omitted."""
        return tuple(TraceItem.from_step(s.label) for s in self.steps if not s.label.is_tau)

    def to_json(self) -> dict[str, Any]:
        return {
            "initial": pretty_print(self.initial),
            "seed": self.seed,
            "stopped": self.stopped,
            "steps": [
                {"label": str(s.label), "target": pretty_print(s.target), "rule": s.rule, "delivered": s.delivered}
                for s in self.steps
            ],
            "deliveries": self.deliveries,
        }


def enumerate_runs(lts: Lts, max_length: int, *, tau_only: bool = True) -> Iterator[RunLog]:
    """Yield every run of the explored graph up to ``max_length`` steps."""

    def walk(state: int, path: list[RunStep]) -> Iterator[RunLog]:
        if path:
            yield RunLog(lts.term(lts.root), list(path), lts.defs, lts.universe)
        if len(path) == max_length:
            return
        for label, dst in sorted(lts.successors(state), key=lambda e: (str(e[0]), e[1])):
            if tau_only and not label.is_tau:
                continue
            path.append(RunStep(label, lts.term(dst)))
            yield from walk(dst, path)
            path.pop()

    yield from walk(lts.root, [])


@dataclass
class ProjectedRun:
    """The two component traces of a run of ``P | Q``.

    Attributes:
        left: Trace attributed to ``P``.
        right: Trace attributed to ``Q``.
        pairs: ``(step, left_action, right_action)`` for each communication.
        alternatives: Step index to every consistent attribution when more
            than one exists.
    """

    left: Trace
    right: Trace
    pairs: list[tuple[int, ActionLabel, ActionLabel]]
    alternatives: dict[int, list[tuple[tuple[ActionLabel, ...], tuple[ActionLabel, ...]]]]

    @property
    def ambiguous(self) -> bool:
        return bool(self.alternatives)


_ROOT_WRAPPERS = ("RES", "OPEN")


def _attribute(root: Transition) -> tuple[tuple[ActionLabel, ...], tuple[ActionLabel, ...], tuple | None]:
    exported = {a.subject: a.obj for a in root.label if a.kind is ActionKind.BOUND_OUTPUT}
    opened: set[Name] = set()
    t = root
    while t.rule in _ROOT_WRAPPERS:
        if t.rule == "OPEN":
            opened.add(t.premises[0].label.actions[0].obj)  # type: ignore[arg-type]
        t = t.premises[0]

    def outer(a: ActionLabel) -> ActionLabel:
        # Report extrusions under the names the top-level step uses.
        if a.kind is ActionKind.BOUND_OUTPUT or (a.kind is ActionKind.FREE_OUTPUT and a.obj in opened):
            return ActionLabel.bout(a.subject, exported.get(a.subject, a.obj))  # type: ignore[arg-type]
        return a

    def visible(x: Transition) -> tuple[ActionLabel, ...]:
        return tuple(outer(a) for a in x.label if not a.is_tau)

    match t.rule:
        case "PAR1":
            return visible(t.premises[0]), (), None
        case "PAR2":
            return (), visible(t.premises[0]), None
        case "PAR3" | "PAR4":
            return visible(t.premises[0]), visible(t.premises[1]), None
        case "COM" | "CLOSE":
            lt, rt = t.premises
            (la,), (ra,) = lt.label.actions, rt.label.actions
            sent = la if la.is_output else ra
            if t.rule == "COM":
                received = ActionLabel.inp(sent.subject, sent.obj)  # type: ignore[arg-type]
            else:
                received = ActionLabel.binp(sent.subject, sent.obj)  # type: ignore[arg-type]
            left, right = (sent, received) if la.is_output else (received, sent)
            return (left,), (right,), (left, right)
    msg = f"step derived by {t.rule} is not a move of the top-level composition"
    raise ProjectionError(msg)


def _item(actions: tuple[ActionLabel, ...]) -> TraceItem:
    return TraceItem(frozenset(a.obj for a in actions if a.is_bound and a.obj is not None), actions)


def project_parallel_run(run: RunLog) -> ProjectedRun:
    """Split a run of ``P | Q`` into the traces of ``P`` and ``Q``.

    Each communication is attributed to complementary actions of the two
    sides, each other action to the side that performed it. Restrictions
    created by extrusion between the sides are looked through.

    Raises:
        ProjectionError: If the run does not start at a parallel
            composition or a step cannot be re-derived.
    """
    if not isinstance(canonicalize(run.initial), Par):
        msg = "run is not rooted at a parallel composition"
        raise ProjectionError(msg)
    left: list[TraceItem] = []
    right: list[TraceItem] = []
    pairs: list[tuple[int, ActionLabel, ActionLabel]] = []
    alternatives: dict[int, list] = {}
    state = canonicalize(run.initial)
    for i, step in enumerate(run.steps):
        seen: dict[tuple, tuple | None] = {}
        for t in derive_transitions(state, run.defs, run.universe):
            if t.label == step.label and t.target == canonicalize(step.target):
                la, ra, pair = _attribute(t)
                seen.setdefault((la, ra), pair)
        if not seen:
            msg = f"step {i} ({step.label}) is not derivable from {pretty_print(state)}"
            raise ProjectionError(msg)
        options = sorted(seen, key=str)
        if len(options) > 1:
            alternatives[i] = options
        la, ra = options[0]
        if la:
            left.append(_item(la))
        if ra:
            right.append(_item(ra))
        pair = seen[options[0]]
        if pair is not None:
            pairs.append((i, *pair))
        state = canonicalize(step.target)
    return ProjectedRun(tuple(left), tuple(right), pairs, alternatives)


def top_level_messages(p: Config) -> list[tuple[Name, Name]]:
    """Messages in flight: ``Msg`` nodes not guarded by a prefix."""
    match p:
        case Msg(subject, obj, _):
            return [(subject, obj)]
        case Par(left, right):
            return top_level_messages(left) + top_level_messages(right)
        case Restriction(_, body):
            return top_level_messages(body)
    return []


def _is_closed(t: Transition) -> bool:
    return not any(a.kind in (ActionKind.FREE_INPUT, ActionKind.BOUND_INPUT) for a in t.label)


class _PendingMessages:
    """Ages of in-flight message occurrences, oldest first per message."""

    def __init__(self) -> None:
        self.by_key: dict[tuple[Name, Name], list[dict[str, Any]]] = defaultdict(list)
        self.deliveries: dict[str, int | None] = {}
        self._counter = 0

    def sync(self, state: Config, step: int) -> None:
        counts: dict[tuple[Name, Name], int] = defaultdict(int)
        for key in top_level_messages(state):
            counts[key] += 1
        for key in set(counts) | set(self.by_key):
            queue = self.by_key[key]
            while len(queue) < counts[key]:
                occ = f"{key[0]}!{key[1]}#{self._counter}"
                self._counter += 1
                queue.append({"id": occ, "since": step, "ready": None})
                self.deliveries[occ] = None
            del queue[counts[key] :]

    def deliver(self, emitted: Sequence[tuple[Name, Name]], step: int) -> list[str]:
        done = []
        for key in emitted:
            queue = self.by_key.get(key)
            if queue:
                occ = queue.pop(0)
                self.deliveries[occ["id"]] = step
                done.append(occ["id"])
        return done

    def mark_ready(self, deliverable: set[tuple[Name, Name]], step: int) -> None:
        for key, queue in self.by_key.items():
            for k, occ in enumerate(queue):
                if k == 0 and key in deliverable:
                    occ["ready"] = step if occ["ready"] is None else occ["ready"]
                else:
                    occ["ready"] = None

    def overdue(self, step: int, window: int) -> tuple[Name, Name] | None:
        waiting = [
            (occ["ready"], occ["since"], key)
            for key, queue in self.by_key.items()
            for occ in queue[:1]
            if occ["ready"] is not None and step - occ["ready"] >= window - 1
        ]
        return min(waiting)[2] if waiting else None


def simulate_fair(
    p: Config,
    defs: Definitions | None = None,
    *,
    max_steps: int = 100,
    seed: int = 0,
    window: int = 64,
    universe: frozenset[Name] | None = None,
) -> RunLog:
    """Run ``p`` as a closed system under a fair scheduler.

    Only steps that need no input from the environment are taken. Each
    step is picked at random (seeded) unless the oldest deliverable message
    has been deliverable for ``window`` consecutive steps, in which case a
    step delivering it is forced. Every message occurrence ends up with the
    index of the step that delivered it, or ``None`` if it was never
    delivered.
    """
    if window < 1:
        msg = "fairness window must be positive"
        raise ValueError(msg)
    rng = random.Random(seed)  # noqa: S311
    defs = defs or {}
    state = canonicalize(p)
    log = RunLog(state, defs=defs, universe=frozenset(universe or ()), seed=seed)
    pending = _PendingMessages()
    pending.sync(state, 0)
    for i in range(max_steps):
        moves = [t for t in derive_transitions(state, defs, universe) if _is_closed(t)]
        if not moves:
            log.stopped = "deadlock"
            break
        moves.sort(key=lambda t: (str(t.label), pretty_print(t.target), t.emitted))
        pending.mark_ready({key for t in moves for key in t.emitted}, i)
        forced = pending.overdue(i, window)
        if forced is not None:
            chosen = rng.choice([t for t in moves if forced in t.emitted])
            logger.debug("Step %d forced delivery of %s!%s", i, *forced)
        else:
            chosen = rng.choice(moves)
        delivered = pending.deliver(chosen.emitted, i)
        log.steps.append(RunStep(chosen.label, chosen.target, chosen.rule, delivered))
        state = chosen.target
        pending.sync(state, i + 1)
    log.deliveries = dict(pending.deliveries)
    logger.info("Simulated %d steps (%s)", len(log.steps), log.stopped)
    return log
