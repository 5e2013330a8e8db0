from __future__ import annotations

from typing import Optional


class SwingBenchError(Exception):
    """Base exception for swingbench errors."""
    pass


class ValidationError(SwingBenchError):
    """Raised when a network or parameter fails validation."""
    pass


class NonPositiveParameter(ValidationError):
    """Raised when a physical parameter that must be positive is not."""
    pass


class ParseError(SwingBenchError):
    """Raised when a network file or preset string cannot be parsed."""

    def __init__(
        self,
        message: str,
        *,
        source: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        field: Optional[str] = None,
    ) -> None:
        location = []
        if source:
            location.append(source)
        if line is not None:
            location.append(f"line {line}")
        if column is not None:
            location.append(f"column {column}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.source = source
        self.line = line
        self.column = column
        self.field = field


class DisconnectedGraph(SwingBenchError):
    """Raised when the network is not connected (algebraic connectivity is zero)."""

    def __init__(self, message: str, *, lambda2: Optional[float] = None) -> None:
        if lambda2 is not None:
            message = f"{message} (lambda2 estimate {lambda2:.3e})"
        super().__init__(message)
        self.lambda2 = lambda2


class SingularResolvent(SwingBenchError):
    """Raised when jwI - A cannot be inverted at the requested frequency."""
    pass


class NotOrthogonal(SwingBenchError):
    """Raised when an input/output transform is not orthogonal."""
    pass


class ObservableMarginalMode(SwingBenchError):
    """Raised when a zero eigenvalue is visible at the output (infinite H2 norm)."""
    pass


class HorizonTooShort(SwingBenchError):
    """Raised when a time-domain horizon does not capture the response."""
    pass


class IntervalTooSparse(SwingBenchError):
    """Raised when a shape check has too few grid points inside its interval."""
    pass
