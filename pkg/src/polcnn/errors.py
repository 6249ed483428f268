"""Exception types shared across the package."""


class PolcnnError(Exception):
    """Base class for all package errors."""


class DataError(PolcnnError, ValueError):
    """Input data violates a documented precondition."""


class FormatError(DataError):
    """A serialized file is malformed.

    ``offset`` is the byte offset at which the problem was detected, when
    one is meaningful.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class BadMagicError(FormatError):
    pass


class TruncatedError(FormatError):
    def __init__(self, expected, actual, offset=None):
        super().__init__(
            f"truncated payload: expected {expected} bytes, found {actual}", offset
        )
        self.expected = expected
        self.actual = actual


class HeaderMismatchError(FormatError):
    pass


class VersionError(FormatError):
    pass


class TrainingDiverged(PolcnnError, RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch, value):
        super().__init__(f"diverged at epoch {epoch}: train MSE = {value}")
        self.epoch = epoch
        self.value = value
