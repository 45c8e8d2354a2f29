class OranFaultException(Exception):
    pass


class ConfigException(OranFaultException):
    """
    Invalid configuration. First argument is the field path (``section.key``)
    """

    def __init__(self, field_path: str, message: str):
        super().__init__(field_path, message)
        self.field_path = field_path
        self.message = message

    def __str__(self):
        return f"{self.field_path}: {self.message}"


class DatasetIOException(OranFaultException):
    def __init__(self, path: str, reason: str):
        super().__init__(path, reason)
        self.path = path
        self.reason = reason

    def __str__(self):
        return f"Cannot access {self.path}: {self.reason}"


class HeaderMismatchException(OranFaultException):
    def __init__(self, path: str, column: int, expected: str, found: str):
        super().__init__(path, column, expected, found)
        self.path = path
        self.column = column
        self.expected = expected
        self.found = found

    def __str__(self):
        return (
            f"{self.path}: header column {self.column} is '{self.found}', "
            f"expected '{self.expected}'"
        )


class DatasetFormatException(OranFaultException):
    def __init__(self, path: str, reason: str):
        super().__init__(path, reason)
        self.path = path
        self.reason = reason

    def __str__(self):
        return f"{self.path}: {self.reason}"


class NonNumericCellException(OranFaultException):
    def __init__(self, path: str, row: int, column: str, value: str):
        super().__init__(path, row, column, value)
        self.path = path
        self.row = row
        self.column = column
        self.value = value

    def __str__(self):
        return (
            f"{self.path}: row {self.row} column '{self.column}' "
            f"holds '{self.value}', not a finite number"
        )


class UnknownLabelException(OranFaultException):
    def __init__(self, path: str, row: int, value: str):
        super().__init__(path, row, value)
        self.path = path
        self.row = row
        self.value = value

    def __str__(self):
        return f"{self.path}: row {self.row} has unknown label code '{self.value}'"


class UnknownMetricException(OranFaultException):
    pass


class FrameOutOfRangeException(OranFaultException):
    pass


class ScheduleMismatchException(OranFaultException):
    pass


class StressOutOfEpisodeException(OranFaultException):
    pass


class InvalidRampException(OranFaultException):
    pass


class TooFewRowsException(OranFaultException):
    def __init__(self, rows: int, minimum: int):
        super().__init__(rows, minimum)
        self.rows = rows
        self.minimum = minimum

    def __str__(self):
        return f"{self.rows} rows available, at least {self.minimum} are required"


class DimensionMismatchException(OranFaultException):
    pass


class PcaModelException(OranFaultException):
    pass


class NonFiniteLossException(OranFaultException):
    pass


class SingleClassException(OranFaultException):
    pass


class StratificationException(OranFaultException):
    def __init__(self, label: int, count: int, k: int, class_counts: dict):
        super().__init__(label, count, k, class_counts)
        self.label = label
        self.count = count
        self.k = k
        self.class_counts = class_counts

    def __str__(self):
        return (
            f"Class {self.label} has {self.count} samples, fewer than k={self.k} "
            f"(class counts {self.class_counts})"
        )


class TickOutOfRangeException(OranFaultException):
    def __init__(self, tick: int, minimum: int, maximum: int):
        super().__init__(tick, minimum, maximum)
        self.tick = tick
        self.minimum = minimum
        self.maximum = maximum

    def __str__(self):
        return (
            f"Tick {self.tick} is out of range, valid ticks are "
            f"[{self.minimum}, {self.maximum}] (minimum {self.minimum})"
        )


class ModelBundleException(OranFaultException):
    pass


class PipelineStageException(OranFaultException):
    def __init__(self, stage: str, cause: Exception, fold: int = None):
        super().__init__(stage, cause, fold)
        self.stage = stage
        self.cause = cause
        self.fold = fold

    def __str__(self):
        where = f"stage '{self.stage}'"
        if self.fold is not None:
            where += f" of fold {self.fold}"
        return f"{where} failed: {self.cause}"
