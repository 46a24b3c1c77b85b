"""
Exception hierarchy for the RIDS lab.

Every error raised on purpose by this package derives from RidsError, so
callers (the CLI in particular) can catch one type.
"""

from typing import Optional


class RidsError(Exception):
    """Base class for all RIDS errors."""


class EncodingError(RidsError):
    """A value cannot be represented in the binary frame layout."""


class DecodeError(RidsError):
    """Binary input is truncated or carries an out-of-range code."""

    def __init__(self, message: str, offset: Optional[int] = None, field: Optional[str] = None):
        self.offset = offset
        self.field = field
        where = []
        if field is not None:
            where.append(f"field={field}")
        if offset is not None:
            where.append(f"offset={offset}")
        suffix = f" ({', '.join(where)})" if where else ""
        super().__init__(f"{message}{suffix}")


class CsvError(RidsError):
    """A CSV row does not match the frame schema."""

    def __init__(self, message: str, line: int, column: Optional[str] = None):
        self.line = line
        self.column = column
        col = f", column {column}" if column is not None else ""
        super().__init__(f"line {line}{col}: {message}")


class ConfigError(RidsError):
    """A scenario file or scenario object is invalid."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class OrderingError(RidsError):
    """Frames reached a detector out of timestamp order."""


class HandshakeError(RidsError):
    """A station received a frame that is illegal in its current phase."""


class TrainingError(RidsError):
    """A model cannot be fitted on the given data."""


class DomainError(RidsError, ValueError):
    """A numeric routine was called outside its domain."""


class ModelFormatError(RidsError):
    """A serialized model has a bad magic, unsupported version or is truncated."""


class ProtocolError(RidsError):
    """A wire message violates the framing rules."""


class CorruptionError(RidsError):
    """A wire message failed its checksum."""


class NeedMoreData(RidsError):
    """The buffer does not yet hold a complete wire message."""
