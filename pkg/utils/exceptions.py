"""
Exceptions Module

Every error raised by the lab derives from ZoLabError so the CLI can map
failures onto its exit-code contract.
"""

from typing import Any, Iterable, Optional


class ZoLabError(Exception):
    """Base class for all lab errors."""


class InvalidSizeError(ZoLabError, ValueError):
    """Agent count or similar size argument out of range."""


class InvalidGraphError(ZoLabError, ValueError):
    """Graph violates a structural requirement (e.g. disconnected)."""


class GraphConstructionError(ZoLabError):
    """Random graph construction exhausted its retry budget."""

    def __init__(self, attempts: int, message: Optional[str] = None):
        self.attempts = attempts
        super().__init__(message or f"no connected graph found after {attempts} attempts")


class InvalidMatrixError(ZoLabError, ValueError):
    """Matrix is not symmetric, not doubly stochastic or otherwise malformed."""


class ShapeError(ZoLabError, ValueError):
    """Array dimensions do not match."""


class InvalidDimensionError(ZoLabError, ValueError):
    """Dimension d < 1."""


class EvaluationError(ZoLabError, ArithmeticError):
    """A function query returned a non-finite value."""


class ScheduleError(ZoLabError, ValueError):
    """Step-size or smoothing-radius parameters violate a theorem precondition."""


class NotApplicableError(ZoLabError):
    """A check cannot be evaluated on the given inputs."""


class DivergenceError(ZoLabError, ArithmeticError):
    """An iterate became non-finite.

    Attributes:
        agent: index of the first agent with a non-finite coordinate
        iteration: iteration t at which it happened
        partial_trace: metrics recorded before the failure (attached by the driver loop)
    """

    def __init__(self, agent: int, iteration: int, partial_trace: Any = None):
        self.agent = agent
        self.iteration = iteration
        self.partial_trace = partial_trace
        super().__init__(f"non-finite iterate at agent {agent}, iteration {iteration}")


class ConfigError(ZoLabError, ValueError):
    """Configuration failed validation; `keys` lists every offending key."""

    def __init__(self, keys: Iterable[str], details: Optional[Iterable[str]] = None):
        self.keys = sorted(set(keys))
        self.details = list(details or [])
        text = f"invalid configuration keys: {', '.join(self.keys)}"
        if self.details:
            text += " (" + "; ".join(self.details) + ")"
        super().__init__(text)


class InvariantViolation(ZoLabError, AssertionError):
    """A run-time identity of the iteration failed its tolerance."""


class ExportError(ZoLabError, OSError):
    """A trace, manifest or report could not be written."""
