"""Declarative goal-oriented dialogue agents on non-deterministic planning."""

from .errors import (
    DeterminationError,
    DialplanError,
    ExecutionError,
    ModelError,
    ParseError,
    PlanDesyncError,
    SpecError,
)

__version__ = "0.1.0"

__all__ = [
    "DialplanError",
    "ParseError",
    "ModelError",
    "SpecError",
    "ExecutionError",
    "DeterminationError",
    "PlanDesyncError",
    "__version__",
]
