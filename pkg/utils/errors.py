"""Exception hierarchy for the dualgraph library."""
from typing import Any, Optional


class DualGraphError(Exception):
    """Base class for all errors raised by the library.

    Kept separate from ``ValueError`` so the CLI can tell library errors apart
    from bugs.
    """


class GraphValidationError(DualGraphError):
    """Raised when a graph description or a graph operation violates the model."""

    def __init__(self, reason: str, detail: str = "") -> None:
        message = reason if not detail else f"{reason}: {detail}"
        super().__init__(message)
        self.reason = reason


class ExceptionalEnergyError(DualGraphError):
    """Raised when an energy lies on (or too close to) the exceptional set of an edge."""

    def __init__(self, energy: float, edge: Optional[str], detail: str = "") -> None:
        message = f"exceptional energy E={energy!r}"
        if edge is not None:
            message += f" on edge {edge!r}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)
        self.energy = energy
        self.edge = edge


class UnsupportedRequestError(DualGraphError):
    """Raised for requests outside what a solver implements."""


class SolverWarning(UserWarning):
    """Diagnostic emitted when a scan may be under-resolved."""

    def __init__(self, message: str, suggestion: Any = None) -> None:
        super().__init__(message)
        self.suggestion = suggestion
