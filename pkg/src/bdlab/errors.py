"""Exception types shared across the package.

Both derive from ValueError so callers that only care about "bad input"
can catch one base class; the CLI maps them to distinct exit codes.
"""

__all__ = ["ConfigError", "PreconditionError"]


class ConfigError(ValueError):
    """A configuration file or config dict is malformed or inconsistent."""


class PreconditionError(ValueError):
    """An operation was called with arguments violating its contract."""
