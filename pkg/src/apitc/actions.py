"""Action labels, step labels and trace items.

These are the observable units shared by the transition system, the
traces, and the event structures.
"""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from apitc.syntax import Name


class ActionKind(str, Enum):
    """Kind of an atomic action."""

    FREE_OUTPUT = "out"
    BOUND_OUTPUT = "bout"
    FREE_INPUT = "in"
    BOUND_INPUT = "bin"
    TAU = "tau"


@dataclass(frozen=True, order=True)
class ActionLabel:
    """An atomic action.

    Attributes:
        kind: Action kind.
        subject: Channel (actor) name; ``None`` for ``tau``.
        obj: Transmitted name; for bound kinds this is the binder.
    """

    kind: ActionKind
    subject: Name | None = None
    obj: Name | None = None

    @classmethod
    def out(cls, subject: Name, obj: Name) -> ActionLabel:
        return cls(ActionKind.FREE_OUTPUT, subject, obj)

    @classmethod
    def bout(cls, subject: Name, obj: Name) -> ActionLabel:
        return cls(ActionKind.BOUND_OUTPUT, subject, obj)

    @classmethod
    def inp(cls, subject: Name, obj: Name) -> ActionLabel:
        return cls(ActionKind.FREE_INPUT, subject, obj)

    @classmethod
    def binp(cls, subject: Name, obj: Name) -> ActionLabel:
        return cls(ActionKind.BOUND_INPUT, subject, obj)

    @classmethod
    def tau(cls) -> ActionLabel:
        return cls(ActionKind.TAU)

    @property
    def is_tau(self) -> bool:
        return self.kind is ActionKind.TAU

    @property
    def is_output(self) -> bool:
        return self.kind in (ActionKind.FREE_OUTPUT, ActionKind.BOUND_OUTPUT)

    @property
    def is_input(self) -> bool:
        return self.kind in (ActionKind.FREE_INPUT, ActionKind.BOUND_INPUT)

    @property
    def is_bound(self) -> bool:
        return self.kind in (ActionKind.BOUND_OUTPUT, ActionKind.BOUND_INPUT)

    @property
    def binder(self) -> Name | None:
        """The bound name of a bound action, else ``None``."""
        return self.obj if self.is_bound else None

    @property
    def names(self) -> frozenset[Name]:
        return frozenset(n for n in (self.subject, self.obj) if n is not None)

    @property
    def free_names(self) -> frozenset[Name]:
        return self.names - {self.binder} if self.is_bound else self.names

    def rename(self, old: Name, new: Name) -> ActionLabel:
        """Return the action with every occurrence of ``old`` replaced."""

        def r(n: Name | None) -> Name | None:
            return new if n == old else n

        return ActionLabel(self.kind, r(self.subject), r(self.obj))

    def to_json(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "subject": self.subject, "object": self.obj}

    def __str__(self) -> str:
        match self.kind:
            case ActionKind.FREE_OUTPUT:
                return f"{self.subject}!{self.obj}"
            case ActionKind.BOUND_OUTPUT:
                return f"{self.subject}!({self.obj})"
            case ActionKind.FREE_INPUT:
                return f"{self.subject}?{self.obj}"
            case ActionKind.BOUND_INPUT:
                return f"{self.subject}?({self.obj})"
        return "tau"


TAU = ActionLabel.tau()


def is_complement(a: ActionLabel, b: ActionLabel) -> bool:
    """Return whether ``b`` is the co-action of ``a`` (same subject and object)."""
    pairs = {
        (ActionKind.FREE_OUTPUT, ActionKind.FREE_INPUT),
        (ActionKind.FREE_INPUT, ActionKind.FREE_OUTPUT),
        (ActionKind.BOUND_OUTPUT, ActionKind.BOUND_INPUT),
        (ActionKind.BOUND_INPUT, ActionKind.BOUND_OUTPUT),
    }
    return (a.kind, b.kind) in pairs and a.subject == b.subject and a.obj == b.obj


@dataclass(frozen=True)
class StepLabel:
    """A finite multiset of actions performed together in one step.

    Actions are kept sorted so equal multisets compare equal. ``tau`` only
    ever appears alone.
    """

    actions: tuple[ActionLabel, ...]

    def __post_init__(self) -> None:
        if not self.actions:
            msg = "a step label needs at least one action"
            raise ValueError(msg)
        if len(self.actions) > 1 and any(a.is_tau for a in self.actions):
            msg = "tau may only appear as a singleton step"
            raise ValueError(msg)
        object.__setattr__(self, "actions", tuple(sorted(self.actions)))

    @classmethod
    def of(cls, *actions: ActionLabel) -> StepLabel:
        return cls(tuple(actions))

    @property
    def is_tau(self) -> bool:
        return self.actions[0].is_tau

    @property
    def is_singleton(self) -> bool:
        return len(self.actions) == 1

    @property
    def binders(self) -> frozenset[Name]:
        return frozenset(a.obj for a in self.actions if a.is_bound and a.obj is not None)

    @property
    def names(self) -> frozenset[Name]:
        out: set[Name] = set()
        for a in self.actions:
            out |= a.names
        return frozenset(out)

    @property
    def free_names(self) -> frozenset[Name]:
        return self.names - self.binders

    def __iter__(self) -> Iterator[ActionLabel]:
        return iter(self.actions)

    def __len__(self) -> int:
        return len(self.actions)

    def __str__(self) -> str:
        if self.is_singleton:
            return str(self.actions[0])
        return "{" + ", ".join(map(str, self.actions)) + "}"


TAU_STEP = StepLabel.of(TAU)


@dataclass(frozen=True)
class TraceItem:
    """One step of a trace: binder set plus the actions performed.

    Attributes:
        binders: Names bound by the item (bound-output objects and fresh
            input objects).
        actions: The visible actions of the step.
    """

    binders: frozenset[Name] = field(default_factory=frozenset)
    actions: tuple[ActionLabel, ...] = ()

    @classmethod
    def from_step(cls, label: StepLabel) -> TraceItem:
        """Build the trace item recorded for a visible step."""
        visible = tuple(a for a in label if not a.is_tau)
        return cls(label.binders, visible)

    @property
    def exported(self) -> frozenset[Name]:
        """Binders sent out by the item's bound outputs."""
        return frozenset(
            a.obj
            for a in self.actions
            if a.kind is ActionKind.BOUND_OUTPUT and a.obj is not None
        )

    @property
    def is_output(self) -> bool:
        return bool(self.actions) and all(a.is_output for a in self.actions)

    @property
    def is_input(self) -> bool:
        return bool(self.actions) and all(a.is_input for a in self.actions)

    @property
    def names(self) -> frozenset[Name]:
        out: set[Name] = set(self.binders)
        for a in self.actions:
            out |= a.names
        return frozenset(out)

    def to_json(self) -> dict[str, Any]:
        return {
            "binders": sorted(self.binders),
            "actions": [a.to_json() for a in self.actions],
        }

    def __str__(self) -> str:
        head = f"[{', '.join(sorted(self.binders))}] " if self.binders else ""
        return head + " | ".join(map(str, self.actions))


Trace = tuple[TraceItem, ...]
