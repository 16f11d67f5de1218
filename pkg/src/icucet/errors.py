"""Exception hierarchy.

Every error carries a ``category`` (the class name, used verbatim on the
CLI's error line) and an ``exit_code``.
"""


class CetError(Exception):
    """Base class for all pipeline errors."""

    exit_code = 3

    @property
    def category(self):
        return type(self).__name__


class DataError(CetError, ValueError):
    exit_code = 3


class UsageError(CetError, ValueError):
    exit_code = 2


class NumericError(CetError, ArithmeticError):
    exit_code = 4


class RowError(DataError):
    """A data error attributable to one CSV row (header is row 1)."""

    def __init__(self, row, message=""):
        self.row = row
        super().__init__(f"row {row}: {message}" if message else f"row {row}")


class MissingColumn(DataError):
    pass


class BadTimestamp(RowError):
    pass


class BadEnum(RowError):
    pass


class BadSignalToken(RowError):
    pass


class BadValue(RowError):
    pass


class DuplicateStayId(DataError):
    pass


class NegativeAge(DataError):
    pass


class AllMissingFeature(DataError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"feature {name!r} has no present values in training rows")


class DegenerateFraction(UsageError):
    pass


class TooFewSamples(DataError):
    pass


class BadClassId(DataError):
    pass


class PreprocessMismatch(DataError):
    pass


class LengthMismatch(DataError):
    pass


class SingleClass(DataError):
    pass


class MissingInput(DataError):
    pass


class VersionMismatch(DataError):
    pass


class CorruptArtifact(DataError):
    pass


class NonFinite(NumericError):
    pass
