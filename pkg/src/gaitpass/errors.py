"""Exception types shared across the package."""


class GaitError(Exception):
    """Base class for all package-specific failures."""


class DataError(GaitError):
    """An input recording is missing, malformed, or internally inconsistent."""


class ConfigError(GaitError):
    """A run configuration failed validation."""


class CodeBookMismatchError(GaitError):
    """Two artifacts built under different code books were compared."""
