"""Prime event structures unfolded from the transition system.

An event is one occurrence of a single action. The actions of a step edge
become pairwise concurrent events caused by everything executed before the
step, so steps taken one after the other are causally ordered. Events of
different edges out of one configuration are in conflict unless both edges
reach the same state, in which case actions they have in common are shared.
An event is keyed by its causes, its action, its multiplicity in the step
and the state the step reaches; branches to different states never share an
event.
"""

from __future__ import annotations

import itertools
import logging
from collections import Counter, defaultdict
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Any

import networkx as nx
from networkx.algorithms.isomorphism import DiGraphMatcher

from apitc.actions import ActionLabel, StepLabel
from apitc.errors import PesError
from apitc.lts import Lts

logger = logging.getLogger(__name__)

Configuration = frozenset[int]


@dataclass(frozen=True)
class Event:
    """An event of the structure.

    Attributes:
        id: Identifier, increasing in creation order.
        label: The action that occurs.
        causes: Strict causes; always downward closed.
        target: State reached by the step the event is part of.
        index: Multiplicity of ``label`` within that step.
    """

    id: int
    label: ActionLabel
    causes: frozenset[int]
    target: int
    index: int = 0

    def to_json(self) -> dict[str, Any]:
        return {"id": self.id, "label": str(self.label), "causes": sorted(self.causes)}


@dataclass
class Pes:
    """A finite prime event structure (events, causality, conflict)."""

    events: dict[int, Event] = field(default_factory=dict)
    conflicts: set[frozenset[int]] = field(default_factory=set)

    def label(self, e: int) -> ActionLabel:
        return self.events[e].label

    def leq(self, a: int, b: int) -> bool:
        return a == b or a in self.events[b].causes

    def in_conflict(self, a: int, b: int) -> bool:
        return frozenset((a, b)) in self.conflicts

    def concurrent(self, a: int, b: int) -> bool:
        return a != b and not (self.leq(a, b) or self.leq(b, a) or self.in_conflict(a, b))

    def is_configuration(self, c: Configuration) -> bool:
        """Return whether ``c`` is downward closed and conflict free."""
        if any(not self.events[e].causes <= c for e in c):
            return False
        return not any(self.in_conflict(a, b) for a, b in itertools.combinations(c, 2))

    def enabled(self, c: Configuration) -> list[int]:
        """Events that can be added to ``c`` on their own."""
        return [
            e
            for e, ev in sorted(self.events.items())
            if e not in c and ev.causes <= c and not any(self.in_conflict(e, x) for x in c)
        ]

    def check_axioms(self) -> list[str]:
        """Return violations of the event-structure axioms (empty if none).

        Checked: causality is a partial order, conflict is irreflexive and
        symmetric and is inherited along causality.
        """
        problems = []
        for e, ev in self.events.items():
            if e in ev.causes:
                problems.append(f"event {e} causes itself")
            for c in ev.causes:
                if not self.events[c].causes <= ev.causes:
                    problems.append(f"causes of {e} are not transitively closed at {c}")
                if e in self.events[c].causes:
                    problems.append(f"events {c} and {e} cause each other")
        for pair in self.conflicts:
            if len(pair) != 2:
                problems.append(f"conflict {sorted(pair)} is reflexive")
                continue
            a, b = sorted(pair)
            if self.leq(a, b) or self.leq(b, a):
                problems.append(f"events {a} and {b} are both related and in conflict")
            for x, y in ((a, b), (b, a)):
                for z, ez in self.events.items():
                    if y in ez.causes and not self.in_conflict(x, z):
                        problems.append(f"conflict {x}#{y} is not inherited by {z}")
        return problems

    def to_json(self) -> dict[str, Any]:
        return {
            "events": [ev.to_json() for _, ev in sorted(self.events.items())],
            "conflicts": sorted(sorted(pair) for pair in self.conflicts),
        }


@dataclass
class Unfolding:
    """Result of ``unfold_to_pes``.

    Attributes:
        pes: The event structure.
        state_of: Configurations built from whole step edges, mapped to the
            state they lead to. Configurations that stop part way through a
            step have no state.
        truncated: Whether a bound cut the unfolding short.
    """

    pes: Pes
    state_of: dict[Configuration, int]
    truncated: bool

    def to_json(self) -> dict[str, Any]:
        return {
            **self.pes.to_json(),
            "configurations": [
                {"events": sorted(c), "state": s}
                for c, s in sorted(self.state_of.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
            ],
            "truncated": self.truncated,
        }


class _Unfolder:
    def __init__(self, lts: Lts) -> None:
        self.lts = lts
        self.pes = Pes()
        self.state_of: dict[Configuration, int] = {frozenset(): lts.root}
        self.keys: dict[tuple[Configuration, ActionLabel, int, int], int] = {}

    def step_events(self, c: Configuration, label: StepLabel, target: int) -> frozenset[int]:
        seen: Counter[ActionLabel] = Counter()
        out = set()
        for action in label:
            key = (c, action, seen[action], target)
            seen[action] += 1
            eid = self.keys.get(key)
            if eid is None:
                eid = len(self.pes.events)
                self.pes.events[eid] = Event(eid, action, c, target, key[2])
                self.keys[key] = eid
            out.add(eid)
        return frozenset(out)

    def record(self, c: Configuration, target: int) -> None:
        known = self.state_of.setdefault(c, target)
        if known != target:
            msg = f"configuration {sorted(c)} reaches both state {known} and state {target}"
            raise PesError(msg)


def unfold_to_pes(lts: Lts, depth: int = 6) -> Unfolding:
    """Unfold the explored transition system into an event structure.

    Configurations are explored breadth-first up to ``depth`` steps. Two
    events are in conflict when neither causes the other and no explored
    configuration contains both.

    Raises:
        PesError: If one configuration would be mapped to two states.
    """
    unfolder = _Unfolder(lts)
    truncated = lts.is_truncated
    layer: set[Configuration] = {frozenset()}
    for size in range(depth + 1):
        following: set[Configuration] = set()
        for c in sorted(layer, key=sorted):
            s = unfolder.state_of[c]
            moves = sorted(lts.successors(s), key=lambda m: (str(m[0]), m[1]))
            if moves and size == depth:
                truncated = True
                continue
            for label, t in moves:
                bigger = c | unfolder.step_events(c, label, t)
                unfolder.record(bigger, t)
                following.add(bigger)
        layer = following
    pes = unfolder.pes
    together: set[frozenset[int]] = set()
    for c in unfolder.state_of:
        together |= {frozenset(pair) for pair in itertools.combinations(c, 2)}
    for a, b in itertools.combinations(sorted(pes.events), 2):
        if not (pes.leq(a, b) or pes.leq(b, a)) and frozenset((a, b)) not in together:
            pes.conflicts.add(frozenset((a, b)))
    logger.info(
        "Unfolded %d events and %d configurations", len(pes.events), len(unfolder.state_of)
    )
    return Unfolding(pes, unfolder.state_of, truncated)


def check_coherence(unfolding: Unfolding, lts: Lts) -> list[str]:
    """Replay every explored configuration in ``lts``, one step at a time.

    The events of a configuration are grouped into steps by their causes
    and executed in causal order from the root; the mapped state must be
    among the states this reaches.

    Returns:
        One message per configuration that does not replay (empty if none).
    """
    pes = unfolding.pes
    problems = []
    for c, state in sorted(unfolding.state_of.items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))):
        steps: dict[frozenset[int], list[int]] = defaultdict(list)
        for e in c:
            steps[pes.events[e].causes].append(e)
        done: frozenset[int] = frozenset()
        states = {lts.root}
        for causes in sorted(steps, key=len):
            if causes != done:
                problems.append(f"configuration {sorted(c)} skips a step before {sorted(steps[causes])}")
                break
            label = StepLabel(tuple(pes.label(e) for e in steps[causes]))
            states = {d for s in states for d in lts.targets(s, label)}
            done |= frozenset(steps[causes])
        else:
            if state not in states:
                problems.append(f"configuration {sorted(c)} does not reach state {state}")
    return problems


def pes_configurations(pes: Pes, limit: int | None = None) -> list[Configuration]:
    """Return every configuration of ``pes``, smallest first."""
    seen: set[Configuration] = {frozenset()}
    layer = [frozenset()]
    while layer:
        nxt: list[Configuration] = []
        for c in layer:
            for e in pes.enabled(c):
                bigger = c | {e}
                if bigger not in seen:
                    seen.add(bigger)
                    nxt.append(bigger)
                    if limit is not None and len(seen) >= limit:
                        return sorted(seen, key=lambda x: (len(x), sorted(x)))
        layer = nxt
    return sorted(seen, key=lambda x: (len(x), sorted(x)))


def enumerate_pomset_transitions(
    pes: Pes, c: Configuration, *, step_only: bool = False
) -> Iterator[tuple[Configuration, Configuration]]:
    """Yield every ``(X, C u X)`` with ``X`` non-empty and ``C u X`` a configuration.

    With ``step_only`` the events of ``X`` must be pairwise concurrent.
    Causes always precede their effects in id order, so building ``X`` in
    increasing ids reaches every candidate exactly once.

    Raises:
        PesError: If ``c`` is not a configuration of ``pes``.
    """
    if not pes.is_configuration(c):
        msg = f"{sorted(c)} is not a configuration"
        raise PesError(msg)
    candidates = sorted(e for e in pes.events if e not in c)

    def extend(start: int, x: frozenset[int]) -> Iterator[tuple[Configuration, Configuration]]:
        for i in range(start, len(candidates)):
            e = candidates[i]
            ev = pes.events[e]
            if not ev.causes <= c | x:
                continue
            if any(pes.in_conflict(e, y) for y in c | x):
                continue
            if step_only and ev.causes & x:
                continue
            bigger = x | {e}
            yield bigger, c | bigger
            yield from extend(i + 1, bigger)

    yield from extend(0, frozenset())


def pomset_graph(pes: Pes, x: frozenset[int], *, visible_only: bool = False) -> nx.DiGraph:
    """Labelled poset of ``x`` as a transitively closed DAG."""
    nodes = [e for e in x if not (visible_only and pes.label(e).is_tau)]
    g = nx.DiGraph()
    for e in nodes:
        g.add_node(e, label=pes.label(e))
    g.add_edges_from((a, b) for a in nodes for b in nodes if a != b and pes.leq(a, b))
    return g


def pomset_isomorphisms(
    pes1: Pes, x1: frozenset[int], pes2: Pes, x2: frozenset[int], *, visible_only: bool = False
) -> Iterator[dict[int, int]]:
    """Yield the label- and order-preserving bijections from ``x1`` to ``x2``."""
    g1 = pomset_graph(pes1, x1, visible_only=visible_only)
    g2 = pomset_graph(pes2, x2, visible_only=visible_only)
    if g1.number_of_nodes() != g2.number_of_nodes() or g1.number_of_edges() != g2.number_of_edges():
        return
    matcher = DiGraphMatcher(g1, g2, node_match=lambda a, b: a["label"] == b["label"])
    yield from matcher.isomorphisms_iter()


def pomsets_isomorphic(
    pes1: Pes, x1: frozenset[int], pes2: Pes, x2: frozenset[int], *, visible_only: bool = False
) -> bool:
    return next(pomset_isomorphisms(pes1, x1, pes2, x2, visible_only=visible_only), None) is not None
