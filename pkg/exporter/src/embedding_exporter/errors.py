"""Error hierarchy for the exporter.

Every failure raised on purpose derives from ExportError and carries a
``category`` used by the CLI's one-line error report.
"""


class ExportError(Exception):
    category = "export"


class ArgumentError(ExportError):
    category = "argument"


class DatasetError(ExportError):
    category = "dataset"


class BackboneError(ExportError):
    category = "backbone"


class FormatError(ExportError):
    """Malformed embedding file; ``offset`` is the failing byte position."""

    category = "format"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset
