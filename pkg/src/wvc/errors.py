"""Exception types shared across the package."""


class WvcError(Exception):
    """Base class for package errors."""


class DataError(WvcError):
    """Input data is unreadable, inconsistent or unusable."""


class WidthMismatchError(DataError):
    """A feature vector does not match the model it is compared against."""
