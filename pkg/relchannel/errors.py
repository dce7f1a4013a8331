"""
Exception hierarchy for relchannel.

Library code raises these; only the CLI turns them into exit codes.
"""

from typing import Any, Dict, Optional, Sequence, Tuple


class RelChannelError(Exception):
    """Base class for all relchannel errors."""

    exit_code = 1


class ConfigError(RelChannelError, ValueError):
    """Invalid or unreadable configuration."""

    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class PhysicsError(RelChannelError, ValueError):
    """Inputs or results outside the physical domain of validity."""

    exit_code = 3

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = dict(diagnostics or {})
        super().__init__(message)


class ConvergenceError(RelChannelError, RuntimeError):
    """A numerical procedure did not reach its tolerance.

    Carries the best value and error estimate reached so far.
    """

    exit_code = 4

    def __init__(
        self,
        message: str,
        value: Any = None,
        error: Optional[float] = None,
        rungs: Optional[Sequence[Tuple[float, complex]]] = None,
    ):
        self.value = value
        self.error = error
        self.rungs = list(rungs) if rungs is not None else None
        details = []
        if value is not None:
            details.append(f"best value {value!r}")
        if error is not None:
            details.append(f"error estimate {error:.3e}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
