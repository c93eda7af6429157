"""Shared exception base for the package."""


class InfeigError(Exception):
    """Base class for all errors raised by this package."""
