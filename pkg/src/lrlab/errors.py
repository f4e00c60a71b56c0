class LRLabError(Exception):
    """Base class for toolkit errors."""


class DomainError(LRLabError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class ResourceError(LRLabError, RuntimeError):
    """A configured resource cap (Hilbert dimension, node budget) was exceeded.

    ``partial`` carries whatever was computed before the cap was hit, if anything.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial

    @property
    def has_partial(self):
        return self.partial is not None


class NumericError(LRLabError, ArithmeticError):
    """A numerical routine failed or did not reach its tolerance."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ConfigError(LRLabError, ValueError):
    """Configuration text failed to parse or validate.

    ``errors`` lists every problem found, not just the first.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class InsufficientDataError(LRLabError, ValueError):
    """Too few finite data points for a fit."""
