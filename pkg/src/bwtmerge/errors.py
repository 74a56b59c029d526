"""Exception hierarchy shared by every module of the package."""


class BwtError(Exception):
    """Base class for all errors raised by bwtmerge."""


class MalformedDataError(BwtError, ValueError):
    """A byte sequence does not decode (truncated varint, bad run code)."""


class InvalidSymbolError(BwtError, ValueError):
    """A symbol value outside [0, 5]."""


class UnsupportedSymbolError(BwtError, ValueError):
    """An operation that is undefined for the endmarker was asked to use it."""


class BoundsError(BwtError, IndexError):
    """A position or occurrence index outside the valid range."""


class InvalidInputError(BwtError, ValueError):
    """Empty reads, empty collections and similar input problems."""


class InvalidPatternError(BwtError, ValueError):
    """A query pattern containing the endmarker or an empty pattern."""


class IncompatibleIndexError(BwtError, ValueError):
    """Indexes using different alphabet orders cannot be combined."""


class CorruptionError(BwtError):
    """Stored data failed a consistency check."""
