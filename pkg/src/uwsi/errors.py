"""Exception types raised across the toolkit."""

from __future__ import annotations


class UwsiError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgument(UwsiError, ValueError):
    """An argument violates an operation's precondition."""


class LengthMismatch(InvalidArgument):
    """A buffer is shorter (or longer) than the operation requires."""

    def __init__(self, what: str, required: int, actual: int):
        self.required = required
        self.actual = actual
        super().__init__(f"{what}: required {required} samples, got {actual}")


class DegenerateSymbol(UwsiError, ArithmeticError):
    """A known symbol is too close to zero to divide by."""


class DegeneratePath(UwsiError, ArithmeticError):
    """A delay bin carries no energy, so a normalized statistic is undefined."""


class NotFound(UwsiError, LookupError):
    """A requested series or artifact does not exist."""


class StageError(UwsiError):
    """Wraps an error raised inside one pipeline stage."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
