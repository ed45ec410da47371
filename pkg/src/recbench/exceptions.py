"""Exception types shared across the toolkit."""


class DataError(Exception):
    "Input data cannot be used: parse failures, schema violations, empty inputs."


class ParseError(DataError):
    "A file failed to parse; carries the offending line number."

    def __init__(self, path, line, message):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


class SchemaError(DataError):
    "A table is missing required columns or violates a structural contract."


class EmptyDataError(DataError):
    "An operation that needs data received an empty table."


class InfeasibleSplitError(ValueError):
    "The requested train/test split cannot be produced from the data."


class UndefinedMetricError(ValueError):
    "A metric has no defined value on the given inputs (e.g. nothing scored)."


class ModelFormatError(DataError):
    "A model file is corrupt, unrecognized, or from a newer format version."
