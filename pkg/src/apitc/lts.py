"""Truly concurrent labelled transition system.

Transitions are labelled with *step labels*: multisets of actions taken in
one move. Independent components of a parallel composition must move
together when both can move (a component may only move alone while its
partner is stuck), which is what makes the semantics truly concurrent
rather than interleaving.

Inputs are instantiated over a finite universe: every free name of the
state, the configured extra names and one fresh witness. The witness also
provides the bound-input transition, and it is what communication uses to
receive a particular name.

Example:
    Exploring a small system::

        >>> from apitc.parser import parse
        >>> lts = build_lts(parse("x!y | x?(v).0"), {}, Bounds(max_depth=2))
        >>> sorted(str(label) for _, label, _ in lts.edges())[:1]
        ['tau']
"""

from __future__ import annotations

import itertools
import logging
from collections import deque
from collections.abc import Iterator
from dataclasses import dataclass, field, replace
from typing import Any

import networkx as nx

from apitc.actions import TAU_STEP, ActionKind, ActionLabel, StepLabel, is_complement
from apitc.errors import SemanticsError, TypingError
from apitc.syntax import (
    NIL,
    Case,
    Config,
    Definitions,
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
    canonicalize,
    free_names,
    fresh_name,
    names,
    pretty_print,
    substitute,
)
from apitc.typesystem import typecheck

logger = logging.getLogger(__name__)

WITNESS_STEM = "w"
EXTRUDED_STEM = "e"


@dataclass(frozen=True)
class Transition:
    """One derivation of a transition.

    Attributes:
        label: Step label of the move.
        target: Resulting configuration.
        rule: Name of the last rule applied (``INP``, ``PAR3``, ``COM``...).
        premises: Derivations of the premises of that rule.
        emitted: Messages ``(subject, object)`` consumed by the move.
    """

    label: StepLabel
    target: Config
    rule: str
    premises: tuple[Transition, ...] = ()
    emitted: tuple[tuple[Name, Name], ...] = ()


@dataclass(frozen=True)
class Bounds:
    """Exploration bounds.

    Attributes:
        max_depth: Maximum number of steps from the root.
        max_states: Maximum number of states.
        universe_extra: Names added to every input universe.
        universe_size: Cap on how many extra names are used.
    """

    max_depth: int = 6
    max_states: int = 20000
    universe_extra: tuple[Name, ...] = ()
    universe_size: int = 8

    def __post_init__(self) -> None:
        if self.max_depth < 1 or self.max_states < 1:
            msg = f"bounds must be positive (max_depth={self.max_depth}, max_states={self.max_states})"
            raise ValueError(msg)

    @classmethod
    def from_config(cls, config: Any) -> Bounds:
        return cls(
            max_depth=config.max_depth,
            max_states=config.max_states,
            universe_extra=tuple(config.universe_extra),
            universe_size=config.universe_size,
        )

    def universe_for(self, p: Config) -> frozenset[Name]:
        """Free names of ``p`` plus the capped extra names."""
        return free_names(p) | frozenset(self.universe_extra[: self.universe_size])


@dataclass(frozen=True)
class _Context:
    defs: Definitions
    universe: frozenset[Name]
    witness: Name
    avoid: frozenset[Name]


def _t(label: StepLabel, target: Config, rule: str, *premises: Transition, emitted: tuple = ()) -> Transition:
    if not emitted:
        emitted = tuple(e for p in premises for e in p.emitted)
    return Transition(label, target, rule, premises, emitted)


def derive_transitions(
    p: Config, defs: Definitions | None = None, universe: frozenset[Name] | set[Name] | None = None
) -> list[Transition]:
    """Return every derivation of a transition from ``p``.

    Args:
        p: Source configuration.
        defs: Behaviour definitions.
        universe: Input objects in addition to ``free_names(p)``.

    Returns:
        Derivations whose targets are canonicalized.

    Raises:
        SemanticsError: If an undefined behaviour must be unfolded.
    """
    base = frozenset(universe or ()) | free_names(p)
    witness = fresh_name(WITNESS_STEM, base | names(p))
    ctx = _Context(defs or {}, base, witness, base | names(p) | {witness})
    out = []
    for t in _derive(p, ctx):
        t = _name_extrusions(t, base | {witness})
        out.append(replace(t, target=canonicalize(t.target)))
    return out


def _name_extrusions(t: Transition, avoid: frozenset[Name]) -> Transition:
    # Extruded names become the first ``e'i`` names outside ``avoid``.
    bound = [a.obj for a in t.label if a.kind is ActionKind.BOUND_OUTPUT]
    if not bound:
        return t
    used = set(names(t.target) | t.label.names | avoid)
    staged = []
    for old in bound:
        tmp = fresh_name("t", used)
        used.add(tmp)
        t = _rename_binder(t, old, tmp)  # type: ignore[arg-type]
        staged.append(tmp)
    chosen = set(avoid)
    for tmp in staged:
        new = fresh_name(EXTRUDED_STEM, chosen)
        chosen.add(new)
        t = _rename_binder(t, tmp, new)
    return t


def step_transitions(
    p: Config, defs: Definitions | None = None, universe: frozenset[Name] | set[Name] | None = None
) -> set[tuple[StepLabel, Config]]:
    """Return the set of ``(label, target)`` pairs derivable from ``p``."""
    return {(t.label, t.target) for t in derive_transitions(p, defs, universe)}


def _input_options(ctx: _Context, subject: Name) -> list[ActionLabel]:
    options = [ActionLabel.inp(subject, z) for z in sorted(ctx.universe)]
    options.append(ActionLabel.inp(subject, ctx.witness))
    options.append(ActionLabel.binp(subject, ctx.witness))
    return options


def _derive(p: Config, ctx: _Context) -> list[Transition]:
    match p:
        case Nil():
            return []
        case Msg(x, y, cont):
            return [_t(StepLabel.of(ActionLabel.out(x, y)), cont or NIL, "OUT", emitted=((x, y),))]
        case Input(x, y, body):
            out = []
            for action in _input_options(ctx, x):
                rule = "BINP" if action.is_bound else "INP"
                out.append(_t(StepLabel.of(action), substitute(body, {y: action.obj}), rule))
            return out
        case TauPrefix(body):
            return [_t(TAU_STEP, body, "TAU")]
        case StepPrefix():
            return _derive_joint(p, ctx)
        case Case(x, branches):
            return [_t(TAU_STEP, body, "BRNCH") for g, body in branches if g == x]
        case Inst(behavior, actors, params):
            d = ctx.defs.get(behavior)
            if d is None:
                msg = f"cannot unfold undefined behaviour {behavior}"
                raise SemanticsError(msg)
            unfolded = substitute(d.body, dict(zip(d.params, actors + params, strict=True)))
            return [_t(t.label, t.target, "BEHV", t) for t in _derive(unfolded, ctx)]
        case Restriction(y, body):
            return _derive_restriction(y, body, ctx)
        case Par(left, right):
            return _derive_par(left, right, ctx)
    msg = f"not a configuration: {p!r}"
    raise TypeError(msg)


def _derive_joint(p: StepPrefix, ctx: _Context) -> list[Transition]:
    outputs = [ActionLabel.out(a.subject, a.obj) for a in p.atoms if isinstance(a, OutputAtom)]
    inputs = [a for a in p.atoms if isinstance(a, InputAtom)]
    emitted = tuple((a.subject, a.obj) for a in p.atoms if isinstance(a, OutputAtom))
    out = []
    for choice in itertools.product(*(_input_options(ctx, a.subject) for a in inputs)):
        actions = outputs + list(choice)
        if any(is_complement(a, b) for a, b in itertools.combinations(actions, 2)):
            continue
        sigma = {atom.binder: action.obj for atom, action in zip(inputs, choice, strict=True)}
        target = substitute(p.body, sigma)  # type: ignore[arg-type]
        out.append(_t(StepLabel(tuple(actions)), target, "STEP", emitted=emitted))
    return out


def _rename_binder(t: Transition, old: Name, new: Name) -> Transition:
    label = StepLabel(tuple(a.rename(old, new) for a in t.label))
    return replace(t, label=label, target=substitute(t.target, {old: new}))


def _freshen_bound_outputs(t: Transition, clash: frozenset[Name], avoid: set[Name]) -> Transition:
    # Alpha-convert extruded names so they miss ``clash``.
    for a in t.label:
        if a.is_output and a.is_bound and a.obj in clash:
            new = fresh_name(a.obj, avoid)  # type: ignore[arg-type]
            avoid.add(new)
            t = _rename_binder(t, a.obj, new)  # type: ignore[arg-type]
    return t


def _derive_restriction(y: Name, body: Config, ctx: _Context) -> list[Transition]:
    out = []
    avoid = set(ctx.avoid) | names(body)
    if y in ctx.universe or y == ctx.witness:
        # The binder shadows an input object; rename it out of the way.
        fresh = fresh_name(y, avoid)
        avoid.add(fresh)
        body, y = substitute(body, {y: fresh}), fresh
    for t in _derive(body, ctx):
        if y in t.label.binders:
            t = _freshen_bound_outputs(t, frozenset({y}), avoid)
        if y not in t.label.names:
            out.append(_t(t.label, Restriction(y, t.target), "RES", t))
            continue
        (action,) = t.label.actions if t.label.is_singleton else (None,)
        if (
            action is not None
            and action.kind is ActionKind.FREE_OUTPUT
            and action.obj == y
            and action.subject != y
        ):
            label = StepLabel.of(ActionLabel.bout(action.subject, y))  # type: ignore[arg-type]
            out.append(_t(label, t.target, "OPEN", t))
    return out


def _merge_labels(a: StepLabel, b: StepLabel) -> StepLabel:
    if a.is_tau:
        return b
    if b.is_tau:
        return a
    return StepLabel(a.actions + b.actions)


def _only(t: Transition, kind: ActionKind) -> ActionLabel | None:
    if t.label.is_singleton and t.label.actions[0].kind is kind:
        return t.label.actions[0]
    return None


def _derive_par(left: Config, right: Config, ctx: _Context) -> list[Transition]:
    tp, tq = _derive(left, ctx), _derive(right, ctx)
    fn_p, fn_q = free_names(left), free_names(right)
    avoid = set(ctx.avoid) | names(left) | names(right)
    out: list[Transition] = []
    if not tq:
        for a in tp:
            a = _freshen_bound_outputs(a, fn_q, avoid)
            out.append(_t(a.label, Par(a.target, right), "PAR1", a))
    if not tp:
        for b in tq:
            b = _freshen_bound_outputs(b, fn_p, avoid)
            out.append(_t(b.label, Par(left, b.target), "PAR2", b))
    if not (tp and tq):
        return out
    for a0, b0 in itertools.product(tp, tq):
        a = _freshen_bound_outputs(a0, fn_q | b0.label.names, avoid)
        b = _freshen_bound_outputs(b0, fn_p | a.label.names, avoid)
        if not (
            any(is_complement(x, y) for x in a.label for y in b.label)
            or a.label.binders & b.label.binders
        ):
            out.append(_t(_merge_labels(a.label, b.label), Par(a.target, b.target), "PAR3", a, b))
        out.extend(_synchronise(a, b, left, right, avoid))
    return out


def _synchronise(
    a: Transition, b: Transition, left: Config, right: Config, avoid: set[Name]
) -> list[Transition]:
    out = []
    a_bin, b_bin = _only(a, ActionKind.BOUND_INPUT), _only(b, ActionKind.BOUND_INPUT)
    if a_bin and b_bin and a_bin.obj == b_bin.obj:
        label = StepLabel.of(a_bin, b_bin)
        out.append(_t(label, Par(a.target, b.target), "PAR4", a, b))
    for sender, receiver, sender_left in ((a, b, True), (b, a, False)):
        recv = _only(receiver, ActionKind.BOUND_INPUT)
        if recv is None:
            continue
        other = right if sender_left else left
        free_out = _only(sender, ActionKind.FREE_OUTPUT)
        if free_out and free_out.subject == recv.subject:
            received = substitute(receiver.target, {recv.obj: free_out.obj})  # type: ignore[dict-item]
            pair = (sender.target, received) if sender_left else (received, sender.target)
            out.append(_t(TAU_STEP, Par(*pair), "COM", *((sender, receiver) if sender_left else (receiver, sender))))
        bound_out = _only(sender, ActionKind.BOUND_OUTPUT)
        if bound_out and bound_out.subject == recv.subject:
            sender = _freshen_bound_outputs(sender, free_names(other), avoid)
            (action,) = sender.label.actions
            y = action.obj
            received = substitute(receiver.target, {recv.obj: y})  # type: ignore[dict-item]
            pair = (sender.target, received) if sender_left else (received, sender.target)
            premises = (sender, receiver) if sender_left else (receiver, sender)
            out.append(_t(TAU_STEP, Restriction(y, Par(*pair)), "CLOSE", *premises))  # type: ignore[arg-type]
    return out


@dataclass
class Lts:
    """A finite (possibly truncated) transition system.

    Attributes:
        graph: ``networkx.MultiDiGraph`` whose nodes are state ids carrying a
            ``term`` attribute and whose edges carry ``label`` and ``rule``.
        root: Id of the initial state.
        truncated: States left unexpanded because a bound was hit.
        universe: Base input universe used during exploration.
    """

    graph: nx.MultiDiGraph
    root: int
    truncated: frozenset[int] = frozenset()
    universe: frozenset[Name] = frozenset()
    defs: Definitions = field(default_factory=dict)

    def term(self, state: int) -> Config:
        return self.graph.nodes[state]["term"]

    @property
    def states(self) -> list[int]:
        return list(self.graph.nodes)

    @property
    def is_truncated(self) -> bool:
        return bool(self.truncated)

    def edges(self) -> Iterator[tuple[int, StepLabel, int]]:
        for src, dst, data in self.graph.edges(data=True):
            yield src, data["label"], dst

    def successors(self, state: int) -> list[tuple[StepLabel, int]]:
        return [(data["label"], dst) for _, dst, data in self.graph.out_edges(state, data=True)]

    def targets(self, state: int, label: StepLabel) -> set[int]:
        return {dst for lab, dst in self.successors(state) if lab == label}

    def to_json(self) -> dict[str, Any]:
        return {
            "root": self.root,
            "truncated": sorted(self.truncated),
            "states": [
                {"id": s, "term": pretty_print(self.term(s))} for s in sorted(self.graph.nodes)
            ],
            "edges": [
                {"src": s, "label": [a.to_json() for a in lab], "text": str(lab), "dst": d}
                for s, lab, d in sorted(self.edges(), key=lambda e: (e[0], e[2], str(e[1])))
            ],
        }

    def to_dot(self) -> str:
        """Render the graph in Graphviz DOT."""
        g = nx.MultiDiGraph()
        for s in self.graph.nodes:
            shape = "doublecircle" if s == self.root else "box" if s in self.truncated else "ellipse"
            g.add_node(s, label=f'"{pretty_print(self.term(s))}"', shape=shape)
        for s, lab, d in self.edges():
            g.add_edge(s, d, label=f'"{lab}"')
        return nx.nx_pydot.to_pydot(g).to_string()


def build_lts(
    p: Config,
    defs: Definitions | None = None,
    bounds: Bounds | None = None,
    universe: frozenset[Name] | set[Name] | None = None,
) -> Lts:
    """Explore the transition system of ``p`` breadth-first within ``bounds``.

    States are canonical configurations, so alpha-equivalent states are
    shared. States at the depth limit, or whose successors would exceed the
    state limit, are recorded as truncated.
    """
    bounds = bounds or Bounds()
    defs = defs or {}
    base = frozenset(universe) if universe is not None else bounds.universe_for(p)
    root = canonicalize(p)
    graph = nx.MultiDiGraph()
    ids: dict[Config, int] = {root: 0}
    graph.add_node(0, term=root)
    truncated: set[int] = set()
    queue: deque[tuple[int, int]] = deque([(0, 0)])
    while queue:
        sid, depth = queue.popleft()
        moves = {(t.label, t.target): t.rule for t in derive_transitions(graph.nodes[sid]["term"], defs, base)}
        if depth >= bounds.max_depth:
            if moves:
                truncated.add(sid)
            continue
        for (label, target), rule in sorted(moves.items(), key=lambda kv: (str(kv[0][0]), pretty_print(kv[0][1]))):
            tid = ids.get(target)
            if tid is None:
                if len(ids) >= bounds.max_states:
                    truncated.add(sid)
                    continue
                tid = len(ids)
                ids[target] = tid
                graph.add_node(tid, term=target)
                queue.append((tid, depth + 1))
            graph.add_edge(sid, tid, key=label, label=label, rule=rule)
    logger.info(
        "Explored %d states and %d transitions (%d truncated)",
        graph.number_of_nodes(),
        graph.number_of_edges(),
        len(truncated),
    )
    return Lts(graph, 0, frozenset(truncated), base, defs)


@dataclass
class WeakClosure:
    """Weak transition relation of an Lts.

    Attributes:
        tau_star: State to the states reachable through zero or more taus.
        weak_steps: Triples ``(s, label, s')`` with ``s =tau*=> -label-> =tau*=> s'``;
            for ``label = tau`` this includes the zero-step case.
    """

    tau_star: dict[int, frozenset[int]]
    weak_steps: set[tuple[int, StepLabel, int]]

    def after(self, state: int, label: StepLabel) -> set[int]:
        return {d for s, lab, d in self.weak_steps if s == state and lab == label}


def weak_closure(lts: Lts) -> WeakClosure:
    """Compute ``=>`` and ``=label=>`` over the explored graph."""
    taus = nx.DiGraph()
    taus.add_nodes_from(lts.graph.nodes)
    taus.add_edges_from((s, d) for s, lab, d in lts.edges() if lab.is_tau)
    tau_star = {s: frozenset(nx.descendants(taus, s) | {s}) for s in taus.nodes}
    steps: set[tuple[int, StepLabel, int]] = set()
    for s, reach in tau_star.items():
        steps |= {(s, TAU_STEP, r) for r in reach}
        for mid in reach:
            for label, dst in lts.successors(mid):
                if label.is_tau:
                    continue
                steps |= {(s, label, end) for end in tau_star[dst]}
    return WeakClosure(tau_star, steps)


@dataclass(frozen=True)
class SubjectReductionViolation:
    """A move from a well-typed state to an ill-typed one.

    Attributes:
        source: The state the move starts from.
        label: The move's label.
        target: The ill-typed state reached.
        clause: ``"action"`` for single-action moves, ``"step"`` for joint steps.
        reason: The typing error raised for ``target``.
    """

    source: Config
    label: StepLabel
    target: Config
    clause: str
    reason: str

    def to_json(self) -> dict[str, Any]:
        return {
            "source": pretty_print(self.source),
            "label": str(self.label),
            "target": pretty_print(self.target),
            "clause": self.clause,
            "reason": self.reason,
        }


@dataclass(frozen=True)
class SubjectReductionReport:
    """Outcome of typing every reachable state."""

    states: int
    truncated: bool
    violation: SubjectReductionViolation | None = None

    @property
    def passed(self) -> bool:
        return self.violation is None

    def to_json(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "states": self.states,
            "truncated": self.truncated,
            "violation": self.violation.to_json() if self.violation else None,
        }


def check_subject_reduction(
    p: Config, defs: Definitions | None = None, bounds: Bounds | None = None
) -> SubjectReductionReport:
    """Typecheck every state reachable from ``p`` within ``bounds``.

    Moves are visited in breadth-first order, so the reported violation is
    one of the closest to the root.

    Raises:
        TypingError: If ``p`` itself is ill-typed.
    """
    defs = defs or {}
    lts = build_lts(p, defs, bounds)
    typecheck(lts.term(lts.root), defs)
    errors: dict[int, TypingError | None] = {lts.root: None}
    for src, label, dst in sorted(lts.edges(), key=lambda e: (e[0], e[2], str(e[1]))):
        if dst not in errors:
            try:
                typecheck(lts.term(dst), defs)
                errors[dst] = None
            except TypingError as e:
                errors[dst] = e
        error = errors[dst]
        if error is not None:
            clause = "action" if label.is_singleton else "step"
            logger.info("Subject reduction fails on %s move to %s", clause, pretty_print(lts.term(dst)))
            violation = SubjectReductionViolation(lts.term(src), label, lts.term(dst), clause, str(error))
            return SubjectReductionReport(len(lts.states), lts.is_truncated, violation)
    return SubjectReductionReport(len(lts.states), lts.is_truncated)
