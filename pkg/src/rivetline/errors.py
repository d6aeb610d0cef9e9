"""Exception types shared across the package."""

from enum import IntEnum


class ConfigError(ValueError):
    """Invalid configuration. ``path`` names the offending key when known."""

    def __init__(self, message: str, path: str | None = None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class UsageError(RuntimeError):
    """An operation was invoked outside its precondition (e.g. stepping a finished episode)."""


class OracleError(RuntimeError):
    """The planning oracle found no all-correct completion."""


class StatusCode(IntEnum):
    """Numeric status codes carried in protocol ``Error`` replies."""

    BadNodeIdUnknown = 1
    BadNodeClass = 2
    BadNotWritable = 3
    BadPrecondition = 4
    BadMessage = 5
    FrameTooLarge = 6


class UaError(Exception):
    """Service-level failure of an address-space operation."""

    def __init__(self, code: StatusCode, message: str = ""):
        super().__init__(f"{code.name}: {message}" if message else code.name)
        self.code = StatusCode(code)
        self.message = message
