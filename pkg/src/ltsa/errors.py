"""Exception hierarchy shared by the package."""


class LTSAError(Exception):
    """Base class for all errors raised by :mod:`ltsa`."""


class DatasetError(LTSAError, ValueError):
    pass


class CSVFormatError(DatasetError):
    """Malformed CSV input. ``row`` and ``col`` are 1-based when known."""

    def __init__(self, message, row=None, col=None):
        self.row = row
        self.col = col
        where = ""
        if row is not None and col is not None:
            where = f" (row {row}, col {col})"
        elif row is not None:
            where = f" (row {row})"
        super().__init__(message + where)


class EmptyFileError(CSVFormatError):
    pass


class RaggedRowError(CSVFormatError):
    pass


class NonNumericError(CSVFormatError):
    pass


class NeighborhoodError(LTSAError, ValueError):
    """Invalid neighborhood request or a neighborhood unusable for the fit.

    ``index`` names the offending point (0-based) when the error concerns a
    single neighborhood.
    """

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message if index is None else f"{message} [point {index}]")


class ConvergenceError(LTSAError, RuntimeError):
    """Iterative eigensolver did not reach the requested tolerance.

    ``report`` carries the solver report with the best residuals obtained.
    """

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class ReconstructionError(LTSAError, ValueError):
    pass
