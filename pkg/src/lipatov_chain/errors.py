"""Exception hierarchy shared by all solvers.

The CLI maps ``ConfigError`` to exit code 2 and ``SolverError`` to exit code 3.
"""


class LipatovError(Exception):
    """Base class for all package errors."""


class ConfigError(LipatovError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class DomainError(LipatovError, ValueError):
    """Input outside the domain of an operation."""


class DegenerateError(DomainError):
    """Coincident roots, vanishing densities and similar degenerate inputs."""


class SolverError(LipatovError, RuntimeError):
    """A numerical procedure failed to reach its target accuracy."""

    def __init__(self, message, *, residual=None, history=None):
        self.residual = residual
        self.history = list(history) if history is not None else []
        super().__init__(message)
