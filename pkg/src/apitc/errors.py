"""Exception hierarchy for the apitc workbench.

Every error raised on purpose by the library derives from ``ApitcError`` so
that callers (the CLI and the MCP tools) can separate input problems from
programming errors.
"""


class ApitcError(Exception):
    """Base class for all workbench errors."""


class ParseError(ApitcError):
    """Raised when source text does not match the grammar."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        """Initialize the error.

        Args:
            message: Human readable description.
            line: 1-based line of the offending token, when known.
            column: 1-based column of the offending token, when known.
        """
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class DefinitionError(ApitcError):
    """Raised for unknown behaviours, arity mismatches and malformed definitions."""


class TempMapError(ApitcError):
    """Raised when a temporary-name map violates its invariants."""


class TypingError(ApitcError):
    """Raised when a configuration has no typing judgement."""

    def __init__(self, rule: str, message: str):
        """Initialize the error.

        Args:
            rule: Name of the typing rule whose premise failed.
            message: Human readable description.
        """
        self.rule = rule
        super().__init__(f"[{rule}] {message}")


class SemanticsError(ApitcError):
    """Raised when a transition cannot be derived, e.g. an undefined behaviour."""


class PesError(ApitcError):
    """Raised for malformed event structures or non-configurations."""


class ProjectionError(ApitcError):
    """Raised when a run cannot be split into its parallel components."""


class BisimError(ApitcError):
    """Raised for invalid equivalence-checking requests."""


class AxiomRejected(ApitcError):
    """Raised when an axiom instance fails a side condition or typing."""

    def __init__(self, axiom: str, reason: str):
        """Initialize the error.

        Args:
            axiom: Axiom identifier, e.g. ``"A9"``.
            reason: The violated side condition or typing rule.
        """
        self.axiom = axiom
        self.reason = reason
        super().__init__(f"{axiom}: {reason}")
