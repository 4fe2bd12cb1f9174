"""Shared exception types."""

from __future__ import annotations


class DialplanError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DialplanError):
    """Syntax or well-formedness error in a PDDL file, with source position."""

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})" if line else message)
        self.line = line
        self.column = column


class ModelError(DialplanError):
    """A structurally valid input that violates a model invariant."""


class SpecError(DialplanError):
    """Agent specification cannot be loaded or fails validation."""


class ExecutionError(DialplanError):
    """Runtime failure while executing a contingent plan."""


class DeterminationError(ExecutionError):
    """A determiner failed or returned an unusable selection."""


class PlanDesyncError(ExecutionError):
    """Determination produced a realization with no edge in the controller."""
