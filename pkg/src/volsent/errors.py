"""Exception hierarchy.

Every error carries a ``category`` (its class name) and an ``exit_code`` used
by the CLI: 2 for configuration problems, 3 for bad data, 4 for numerical
failures.
"""


class VolsentError(Exception):
    exit_code = 3

    @property
    def category(self) -> str:
        return type(self).__name__


class ConfigError(VolsentError, ValueError):
    exit_code = 2


class MissingInput(ConfigError):
    pass


class DataError(VolsentError, ValueError):
    exit_code = 3


class MalformedRow(DataError):
    def __init__(self, line, detail=""):
        self.line = line
        super().__init__(f"malformed row at line {line}" + (f": {detail}" if detail else ""))


class NonPositivePrice(DataError):
    def __init__(self, date):
        self.date = date
        super().__init__(f"non-positive close on {date}")


class DuplicateDate(DataError):
    def __init__(self, date):
        self.date = date
        super().__init__(f"duplicate date {date}")


class EmptyFile(DataError):
    pass


class EmptyInput(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class EmptyIntersection(DataError):
    pass


class UnalignedCalendars(DataError):
    pass


class EmptyCorpus(DataError):
    pass


class SingleClassCorpus(DataError):
    pass


class EmptyDay(DataError):
    def __init__(self, date):
        self.date = date
        super().__init__(f"no headlines on {date}")


class EmptyDataset(DataError):
    pass


class EmptyEvalSet(DataError):
    pass


class EmptySequence(DataError):
    pass


class LengthMismatch(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class DegenerateInput(DataError):
    pass


class NonFiniteTarget(DataError):
    pass


class InvalidId(DataError):
    pass


class ZeroVector(DataError):
    pass


class NumericError(VolsentError, ArithmeticError):
    exit_code = 4


class NonFiniteLikelihood(NumericError):
    pass


class OptimizerDiverged(NumericError):
    pass


class ZeroVariancePredictor(NumericError):
    pass
