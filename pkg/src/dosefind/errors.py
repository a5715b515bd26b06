"""Semantic exception hierarchy. Public functions raise these, never bare ValueError."""


class DoseFindError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(DoseFindError, ValueError):
    """An argument violates its documented domain or invariant."""


class ComputationError(DoseFindError, ArithmeticError):
    """A numerical routine failed to converge or left its valid domain."""


class ConfigError(DoseFindError):
    """A design / trial configuration is inconsistent (CLI exit code 2, HTTP 400)."""


class ConflictError(DoseFindError):
    """Optimistic-concurrency conflict on a live trial session (HTTP 409)."""
