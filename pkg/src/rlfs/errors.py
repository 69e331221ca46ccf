"""Exception types shared across the package."""


class RLFSError(Exception):
    """Base class for every error raised by rlfs."""


# dataset ingestion / splitting

class DatasetError(RLFSError, ValueError):
    pass


class MissingColumn(DatasetError):
    def __init__(self, column):
        super().__init__(f"label column {column!r} not found in header")
        self.column = column


class NonNumericCell(DatasetError):
    def __init__(self, row, col, value):
        super().__init__(f"row {row}, column {col!r}: non-numeric value {value!r}")
        self.row = row
        self.col = col


class MissingValue(DatasetError):
    def __init__(self, row, col):
        super().__init__(f"row {row}, column {col!r}: missing value")
        self.row = row
        self.col = col


class UnknownLabelValue(DatasetError):
    def __init__(self, row, value):
        super().__init__(f"row {row}: unexpected label value {value!r}")
        self.row = row
        self.value = value


class TooFewRows(DatasetError):
    pass


class SingleClass(DatasetError):
    pass


class DegenerateSplit(DatasetError):
    pass


# shape checks

class DimensionMismatch(RLFSError, ValueError):
    pass


# classifier

class EmptyNode(RLFSError, ValueError):
    pass


class EmptyTrainingSet(RLFSError, ValueError):
    pass


# environment / agents

class StepOnTerminal(RLFSError, RuntimeError):
    pass


class IndexOutOfRange(RLFSError, IndexError):
    pass


class MissingNextAction(RLFSError, ValueError):
    pass


# policy / oracle

class EmptySubset(RLFSError, ValueError):
    pass


class TooManyFeatures(RLFSError, ValueError):
    pass
