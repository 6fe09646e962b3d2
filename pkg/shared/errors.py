"""Exception hierarchy and process exit codes."""

from enum import IntEnum


class ExitCode(IntEnum):
    """Process exit status of the CLI."""

    OK = 0
    CONFIG = 2
    IO = 3
    INVARIANT = 4


class PPPConcError(Exception):
    """Base class for every error raised by this package."""


class ModelError(PPPConcError, ValueError):
    """An intensity model is ill-formed (bad parameters or a negative dip)."""


class QuadratureError(PPPConcError, ArithmeticError):
    """Composite Simpson did not settle between successive panel counts."""


class DomainError(PPPConcError, ValueError):
    """An argument lies outside an operation's precondition."""


class ConfigError(PPPConcError, ValueError):
    """An experiment configuration is invalid."""


class InvariantViolation(PPPConcError, AssertionError):
    """A post-condition checked at runtime does not hold."""

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        self.detail = detail
        message = f"invariant violated: {invariant}"
        if detail:
            message = f"{message} ({detail})"
        super().__init__(message)


def exit_code_for(exc: BaseException) -> ExitCode:
    """Map an exception raised during an experiment to the CLI exit status."""
    if isinstance(exc, InvariantViolation):
        return ExitCode.INVARIANT
    if isinstance(exc, OSError):
        return ExitCode.IO
    # pydantic.ValidationError subclasses ValueError
    if isinstance(exc, PPPConcError | ValueError | ArithmeticError):
        return ExitCode.CONFIG
    raise exc
