"""Exception types shared across the package."""


class LtBarrierError(Exception):
    """Base class for all package errors."""


class CapabilityError(LtBarrierError):
    """A requested feature is outside what the implementation supports."""


class FactorizationError(LtBarrierError):
    """Matrix factorization failed (rank deficiency or invalid input)."""


class ConfigError(LtBarrierError):
    """An experiment configuration file or object is invalid."""
