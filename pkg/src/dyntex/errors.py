"""Exception hierarchy.

``DataError`` subclasses map to CLI exit code 2, ``NumericalError`` to 3.
"""


class DyntexError(Exception):
    """Base class for all errors raised by this package."""


class DataError(DyntexError):
    """Input data is missing, unreadable or inconsistent."""


class GeometryError(DataError):
    """Frame geometries do not agree."""


class DegenerateSequenceError(DataError):
    """All frames are identical, so there is nothing to learn."""

    def __init__(self, msg="degenerate sequence"):
        super().__init__(msg)


class ModelFormatError(DataError):
    """A model file could not be decoded."""


class BadMagicError(ModelFormatError):
    pass


class TruncatedFileError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


class NumericalError(DyntexError):
    """A factorization or decomposition failed."""
