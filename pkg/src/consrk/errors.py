"""Exception types shared across the toolkit."""


class ConsrkError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ConsrkError):
    """Invalid configuration or argument combination."""


class DomainError(ConsrkError):
    """Input outside the mathematical domain of an operation."""


class SingularMatrix(ConsrkError):
    """A pivot collapsed during LU factorisation; usually the step size is too large."""


class NoConvergence(ConsrkError):
    """An iteration failed to reach its tolerance within the iteration cap."""


class Diverged(ConsrkError):
    """Iterates blew past the divergence guard."""


class FirstStep(ConsrkError):
    """A history-based predictor was called without step history."""


class Unsupported(ConsrkError):
    """The problem lacks a capability required by the operation."""
