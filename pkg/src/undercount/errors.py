"""Exception types shared across the package."""


class UndercountError(Exception):
    """Base class for every error raised by this library."""


class BoundsError(UndercountError, IndexError):
    """An index or window falls outside the usable range of a series."""


class DomainError(UndercountError, ValueError):
    """An argument is structurally valid but outside the operation's domain."""


class IngestionError(UndercountError, ValueError):
    """A data file cannot be loaded or fails validation."""
