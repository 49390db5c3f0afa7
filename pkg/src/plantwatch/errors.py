"""Exception types shared across the package."""

from __future__ import annotations


class PlantwatchError(Exception):
    """Base class for every failure raised by this package."""


class ConfigError(PlantwatchError):
    """Invalid configuration, generation plan, or command-line input."""


class DataError(PlantwatchError):
    """Malformed or inconsistent input data."""


class EmptyFile(DataError):
    """A dataset file contains a header but no data rows (or nothing at all)."""


class EmptyInput(DataError):
    """An operation that needs at least one row or frame received none."""


class MissingColumn(DataError):
    """A required column is absent from a CSV header."""


class SchemaMismatch(DataError):
    """Columns exist but do not line up with the declared channel schema."""


class NonNumericCell(DataError):
    """A data cell failed to parse as a finite float.

    Attributes:
        row: zero-based data row index (header excluded).
        column: column name as it appears in the header.
    """

    def __init__(self, row: int, column: str, value: str):
        super().__init__(f"non-numeric value {value!r} at data row {row}, column {column!r}")
        self.row = row
        self.column = column
        self.value = value


class UnknownChannel(DataError):
    """A channel name is not present in the frame or schema."""


class ModelFormatError(DataError):
    """A saved model container is malformed, or its type/version is unsupported."""


class DimensionMismatch(DataError):
    """Array shapes do not agree with the fitted or declared dimensions."""


class SeriesTooShort(DataError):
    """The series has fewer rows than the operation's minimum length."""


class NonFiniteLoss(PlantwatchError):
    """Training produced a NaN or infinite loss.

    Attributes:
        epoch: zero-based epoch index at which the loss degenerated.
    """

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite training loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


class EigenFailure(PlantwatchError):
    """The Jacobi sweep failed to converge or produced non-finite values."""


class InvalidInterval(DataError):
    """An attack or window interval is empty, negative, or out of range."""


class IntervalOutOfRange(InvalidInterval):
    """An attack interval does not fit inside the simulated sample."""


class DetectionBeforeWindow(PlantwatchError):
    """A positional score was requested for a detection before window start."""


class UnsortedDetections(DataError):
    """Detection indices must be strictly increasing."""


class OverlappingSamples(DataError):
    """Concatenated sample spans overlap or offsets are not increasing."""


class UnknownMode(ConfigError):
    """Requested operating mode is not defined by the plant configuration."""


class UnknownVariant(ConfigError):
    """Requested transient variant name is not defined."""


class MissingMode(PlantwatchError):
    """A per-mode model bank has no model for a test sample's mode."""


class SampleMismatch(PlantwatchError):
    """Detections and corpus manifest do not describe the same samples."""
