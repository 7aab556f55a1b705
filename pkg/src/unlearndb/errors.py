"""Exception types with stable machine-readable categories.

Every failure the engine can surface carries a short category token. The
CLI prints that token on its one-line error contract, so scripts can
branch on the category without parsing prose.
"""


class EngineError(Exception):
    """Base class for all engine failures."""

    category = "internal"


class DimensionMismatch(EngineError):
    category = "dimension"


class DegenerateVector(EngineError):
    category = "degenerate-vector"


class DuplicateId(EngineError):
    category = "conflict"


class EmptyStore(EngineError):
    category = "empty-store"


class MissingClass(EngineError):
    category = "missing-class"


class ArgumentError(EngineError):
    category = "argument"


class FormatError(EngineError):
    """Malformed embedding file. Carries the byte offset of the fault."""

    category = "format"

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DataError(EngineError):
    category = "data"


class InvalidWorkload(EngineError):
    category = "invalid-workload"


class DegenerateModel(EngineError):
    category = "degenerate-model"
