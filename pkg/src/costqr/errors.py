"""Exception types raised by costqr."""


class CostQRError(ValueError):
    """Base class for all costqr errors."""


class ZeroVector(CostQRError):
    pass


class DegeneratePivot(CostQRError):
    """The best-scoring column has (numerically) zero residual norm."""


class InvalidCost(CostQRError):
    pass


class StepOutOfRange(CostQRError):
    pass


class ShapeMismatch(CostQRError):
    pass


class RankRequestTooLarge(CostQRError):
    pass


class GridMismatch(CostQRError):
    pass


class IndexOutOfRange(CostQRError, IndexError):
    pass


class EmptyTestSet(CostQRError):
    pass


class DegenerateSplit(CostQRError):
    pass


class CombinatorialBlowup(CostQRError):
    pass


class CorruptHeader(CostQRError):
    pass


class ShapeOverflow(CostQRError):
    pass


class ParseError(CostQRError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)


class BadSpec(CostQRError):
    pass


class ConfigError(CostQRError):
    """Invalid experiment config; ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class IoError(OSError):
    """Writing an output file failed."""
