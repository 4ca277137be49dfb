"""Exception types shared across the package."""


class HillError(Exception):
    """Base class for all errors raised by hillconvex."""


class DomainError(HillError, ValueError):
    """An argument lies outside the set where a formula is defined."""


class NoRootError(HillError):
    """A bracketed root search found no sign change."""


class EmptyFiberError(HillError):
    """No ray produced a sign change while extracting a fiber curve."""


class SweepError(HillError):
    """A lattice sweep hit a non-finite value or an invalid configuration."""


class ConfigError(HillError, ValueError):
    """Invalid run configuration (bad epsilon, unknown identifier, ...)."""
