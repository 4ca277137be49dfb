"""Verified numerics for fiberwise convexity in Hill's lunar problem."""

__version__ = "0.1.0"

from .errors import ConfigError, DomainError, HillError  # noqa: E402,F401
