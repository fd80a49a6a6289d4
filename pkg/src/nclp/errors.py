"""Exception types shared across the package."""


class NclpError(Exception):
    """Base class for all errors raised by nclp."""


class InvalidExponentError(NclpError, ValueError):
    """An exponent lies outside the range an operation is defined for."""


class DomainError(NclpError, ValueError):
    """Input violates a structural precondition (shape, hermiticity, rank)."""


class ResourceError(NclpError, RuntimeError):
    """A construction would exceed the configured size cap."""


class StateExtractionError(NclpError, RuntimeError):
    """The vacuum density could not be realised as a positive element."""


class ConfigError(NclpError, ValueError):
    """An experiment or solver configuration is invalid."""
