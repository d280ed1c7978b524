"""
Errors - Exception hierarchy for malformed input and violated preconditions.

Verification failures are not exceptions; they are reported as Verdicts.
"""

from typing import Any, Optional


class QWhileError(ValueError):
    """Base class for all qwhile_verifier errors."""


class DimensionMismatchError(QWhileError):
    """Operands have incompatible dimensions."""


class NotHermitianError(QWhileError):
    """An operator that must be Hermitian is not (within tolerance)."""


class PredicateBoundsError(QWhileError):
    """An operator violates 0 <= A <= I, or a state violates positivity / trace bounds."""


class UnknownIdentifierError(QWhileError):
    """A variable, gate, measurement or predicate name is not declared."""


class StaticCheckError(QWhileError):
    """A declaration or statement fails a static check (unitarity, completeness, arity)."""


class DimensionLimitError(QWhileError):
    """The requested space exceeds the configured dimension cap."""


class InvalidPathError(QWhileError):
    """A subprogram path does not address a subprogram."""


class ParseError(QWhileError):
    """Syntax error with a source position."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        self.bare_message = message
        super().__init__(f"line {line}, col {col}: {message}")


class SideConditionError(QWhileError):
    """
    A proof rule's side condition does not hold.

    Attributes:
        rule: Rule tag, e.g. "R.Or"
        condition: Human-readable statement of the violated condition
        candidate: The conclusion the rule would have produced, if it could be built
        margin: Minimum eigenvalue of a violated Loewner condition, when there is one
    """

    def __init__(self, rule: str, condition: str, detail: str = "", candidate: Optional[Any] = None,
                 margin: Optional[float] = None):
        self.rule = rule
        self.margin = margin
        self.condition = condition
        self.detail = detail
        self.candidate = candidate
        message = f"({rule}) side condition violated: {condition}"
        if detail:
            message += f" [{detail}]"
        super().__init__(message)
