"""Exception types shared across the package."""


class StreamAnonError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(StreamAnonError):
    """A record or configuration document could not be parsed."""


class ValidationError(StreamAnonError):
    """A configuration value violates an invariant. Names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class TypeMismatchError(StreamAnonError):
    """An attribute holds a value of the wrong kind for the configured role."""


class UnknownCategoryError(StreamAnonError):
    """A category ID was never assigned for the given attribute."""


class ConfigError(StreamAnonError):
    """The pipeline was assembled with an unusable configuration."""


class ContractViolation(StreamAnonError):
    """An internal precondition was broken; indicates a bug, not bad input."""
