"""Exception hierarchy shared across the package."""


class MocapsegError(Exception):
    """Base class for all package errors."""


class BvhParseError(MocapsegError):
    """Malformed BVH input. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataError(MocapsegError):
    """Invalid or inconsistent data outside the BVH parser (labels, manifests, shapes)."""


class NumericError(MocapsegError):
    """Numeric failure: non-finite loss, failed gradient check, corrupt checkpoint arrays."""
