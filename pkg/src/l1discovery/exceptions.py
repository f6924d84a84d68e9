"""Exception hierarchy shared by the solvers, the material layer and the CLI."""

from __future__ import annotations


class DiscoveryError(Exception):
    """Base class for every error raised by this package."""


class ZeroColumnError(DiscoveryError, ValueError):
    def __init__(self, column: int):
        super().__init__(f"feature column {column} has (near) zero norm")
        self.column = column


class RankDeficientError(DiscoveryError, ValueError):
    pass


class LengthMismatchError(DiscoveryError, ValueError):
    pass


class SingularGramError(DiscoveryError, ArithmeticError):
    pass


class CorrelationTieError(DiscoveryError, ArithmeticError):
    def __init__(self, indices, step: int):
        super().__init__(
            f"features {sorted(indices)} reach the maximal correlation "
            f"simultaneously at step {step}"
        )
        self.indices = tuple(indices)
        self.step = step


class NotConvergedError(DiscoveryError, RuntimeError):
    """Iteration budget exhausted. ``last_iterate`` holds the final vector."""

    def __init__(self, max_steps: int, last_iterate=None, message: str | None = None):
        super().__init__(message or f"no convergence within {max_steps} steps")
        self.max_steps = max_steps
        self.last_iterate = last_iterate


class DivergedError(DiscoveryError, RuntimeError):
    pass


class NonFiniteObjectiveError(DiscoveryError, FloatingPointError):
    def __init__(self, w, message: str = "objective is not finite"):
        super().__init__(message)
        self.w = w


class OutOfRangeError(DiscoveryError, ValueError):
    pass


class NonPositiveStretchError(DiscoveryError, ValueError):
    pass


class EmptySupportError(DiscoveryError, ValueError):
    pass


class NoQualifyingKnotError(DiscoveryError, LookupError):
    pass


class ParseError(DiscoveryError, ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


class StageError(DiscoveryError):
    """Wraps a failure from a pipeline component with the stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
