"""Multichannel time-series container, channel schema, and CSV ingestion.

A dataset sample is a fixed-rate multichannel series. Channels carry a role:
plant measurements (MEAS) and manipulated variables (MV) are model inputs;
attack indicator channels and bookkeeping specials are labels/metadata and
are never fed to a model.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DataError,
    EmptyFile,
    MissingColumn,
    NonNumericCell,
    SchemaMismatch,
    UnknownChannel,
)

SCHEMA_VERSION = 1


class ChannelRole(str, Enum):
    MEAS = "MEAS"
    MV = "MV"
    MEAS_INDICATOR = "MEAS_INDICATOR"
    MV_INDICATOR = "MV_INDICATOR"
    SP_INDICATOR = "SP_INDICATOR"
    SPECIAL = "SPECIAL"


#: Roles whose channels are presented to detection models.
MODEL_INPUT_ROLES = (ChannelRole.MEAS, ChannelRole.MV)

#: Roles that mark attack intervals; values are exactly 0.0 or 1.0.
INDICATOR_ROLES = (
    ChannelRole.MEAS_INDICATOR,
    ChannelRole.MV_INDICATOR,
    ChannelRole.SP_INDICATOR,
)


@dataclass(frozen=True)
class ChannelMeta:
    """Name and role of one recorded channel."""

    name: str
    role: ChannelRole

    def __post_init__(self):
        if not self.name:
            raise DataError("channel name must be non-empty")
        if not isinstance(self.role, ChannelRole):
            object.__setattr__(self, "role", ChannelRole(self.role))


@dataclass(frozen=True)
class TimeSeriesFrame:
    """Immutable (T, D) float64 series with per-channel metadata.

    Attributes:
        channels: channel metadata, one entry per data column.
        data: float64 array of shape (T, D); frozen after construction.
        sample_rate: points per hour, a positive integer.
        provenance: opaque record attached by the simulator so attacks can
            re-simulate dynamics; absent for frames loaded from disk.
    """

    channels: tuple[ChannelMeta, ...]
    data: np.ndarray
    sample_rate: int
    provenance: object | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        channels = tuple(self.channels)
        object.__setattr__(self, "channels", channels)
        data = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if data.ndim != 2:
            raise DataError(f"frame data must be 2-D, got shape {data.shape}")
        if data.shape[0] < 1:
            raise DataError("frame must contain at least one row")
        if data.shape[1] != len(channels):
            raise DataError(
                f"data has {data.shape[1]} columns but schema lists {len(channels)} channels"
            )
        if not np.isfinite(data).all():
            raise DataError("frame data must be finite")
        names = [c.name for c in channels]
        if len(set(names)) != len(names):
            raise DataError("channel names must be unique")
        if int(self.sample_rate) < 1:
            raise DataError(f"sample_rate must be >= 1, got {self.sample_rate}")
        object.__setattr__(self, "sample_rate", int(self.sample_rate))
        data.flags.writeable = False
        object.__setattr__(self, "data", data)

    @property
    def n_points(self) -> int:
        return self.data.shape[0]

    @property
    def n_channels(self) -> int:
        return self.data.shape[1]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.channels)

    def index_of(self, name: str) -> int:
        for i, c in enumerate(self.channels):
            if c.name == name:
                return i
        raise UnknownChannel(f"channel {name!r} not in frame")

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.index_of(name)]

    def role_indices(self, *roles: ChannelRole) -> np.ndarray:
        wanted = set(roles)
        return np.array(
            [i for i, c in enumerate(self.channels) if c.role in wanted], dtype=int
        )

    def model_input_indices(self) -> np.ndarray:
        return self.role_indices(*MODEL_INPUT_ROLES)

    def model_input(self) -> np.ndarray:
        """Model-facing view: MEAS and MV columns, in schema order."""
        return self.data[:, self.model_input_indices()]

    def replace_data(self, data: np.ndarray) -> "TimeSeriesFrame":
        return TimeSeriesFrame(self.channels, data, self.sample_rate, self.provenance)


# ---------------------------------------------------------------------------
# channel schema files
# ---------------------------------------------------------------------------

def save_schema(channels: Sequence[ChannelMeta], path: str | Path) -> None:
    payload = [{"name": c.name, "role": c.role.value} for c in channels]
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def load_schema(path: str | Path) -> tuple[ChannelMeta, ...]:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"schema file {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, list) or not payload:
        raise SchemaMismatch(f"schema file {path} must be a non-empty JSON list")
    out = []
    for entry in payload:
        try:
            out.append(ChannelMeta(entry["name"], ChannelRole(entry["role"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaMismatch(f"bad schema entry {entry!r}: {exc}") from exc
    return tuple(out)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def write_frame_csv(frame: TimeSeriesFrame, path: str | Path) -> None:
    """Write one sample: a `time` column in hours, then channels in order.

    Floats are rendered with repr so re-reading reproduces every value
    bit-exactly and repeated runs emit byte-identical files.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", *frame.names])
        rate = float(frame.sample_rate)
        for i in range(frame.n_points):
            writer.writerow([repr(i / rate), *(repr(float(v)) for v in frame.data[i])])


def load_dataset(
    path: str | Path,
    schema: Sequence[ChannelMeta],
    sample_rate: int | None = None,
) -> TimeSeriesFrame:
    """Parse one CSV sample against a channel schema.

    The header must be exactly `time` followed by the schema's channel names
    in schema order. Every cell must parse as a finite float and the time
    column must be strictly increasing. When `sample_rate` is not given it is
    recovered from the median time step (needs at least two rows).
    """
    path = Path(path)
    schema = tuple(schema)
    with path.open("r", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyFile(f"{path} is empty") from None
        expected = ["time", *(c.name for c in schema)]
        if header != expected:
            missing = [name for name in expected if name not in header]
            if missing:
                raise MissingColumn(f"{path}: missing columns {missing}")
            raise SchemaMismatch(
                f"{path}: header does not match schema order (got {header[:4]}...)"
            )
        times: list[float] = []
        rows: list[list[float]] = []
        for r, raw in enumerate(reader):
            if not raw:
                continue
            if len(raw) != len(expected):
                raise SchemaMismatch(
                    f"{path}: data row {r} has {len(raw)} cells, expected {len(expected)}"
                )
            parsed = []
            for name, cell in zip(expected, raw):
                try:
                    value = float(cell)
                except ValueError:
                    raise NonNumericCell(r, name, cell) from None
                if not math.isfinite(value):
                    raise NonNumericCell(r, name, cell)
                parsed.append(value)
            times.append(parsed[0])
            rows.append(parsed[1:])
    if not rows:
        raise EmptyFile(f"{path} has a header but no data rows")
    t = np.asarray(times)
    if len(t) > 1 and not (np.diff(t) > 0).all():
        raise DataError(f"{path}: time column must be strictly increasing")
    if sample_rate is None:
        if len(t) < 2:
            raise DataError(
                f"{path}: cannot derive sample rate from a single row; pass sample_rate"
            )
        step = float(np.median(np.diff(t)))
        sample_rate = int(round(1.0 / step))
        if sample_rate < 1:
            raise DataError(f"{path}: non-positive derived sample rate from step {step}")
    return TimeSeriesFrame(schema, np.asarray(rows, dtype=np.float64), sample_rate)
