"""Exception types shared across the package."""

from __future__ import annotations


class CspError(Exception):
    """Base class for errors raised by this package."""


class UsageError(CspError, ValueError):
    """A caller passed arguments that violate an operation's precondition."""


class ParseError(CspError, ValueError):
    """Malformed input; ``path`` names the offending location."""

    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class ResourceError(CspError, RuntimeError):
    """A configured size or time cap was exceeded."""


class PropertyViolation(CspError, RuntimeError):
    """A constructed object failed its own validation."""
