"""Exception hierarchy shared by every module."""

from __future__ import annotations


class NashError(Exception):
    """Base class for all errors raised by mlnash."""


class ArgumentError(NashError, ValueError):
    """An argument is out of range (player index, strategy index, eps...)."""


class ValidationError(NashError, ValueError):
    """A data object (game, profile, spec, program) violates its invariants."""


class CapacityError(NashError, RuntimeError):
    """A brute-force routine was asked to enumerate too many objects."""


class UnknownGameError(NashError, KeyError):
    """Lookup of a named game failed."""


class CorruptionError(NashError, ValueError):
    """Solver output is too far from a probability simplex to be repaired."""


class ParseError(NashError, ValueError):
    """Malformed input text; carries the 1-based line/column of the problem."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"line {line}, column {column}: {message}"
        super().__init__(message)
