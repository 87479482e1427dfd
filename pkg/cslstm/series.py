"""
The time-series data model: CSV ingestion, imputation of missing points,
z-score normalization and the chronological train/validation/test split.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from cslstm.error import (
    ArgumentError,
    DataError,
    ImputationError,
    ParseError,
    SchemaError,
    SplitError,
)
from cslstm.utils import as_binary_array

log = logging.getLogger(__name__)

DEFAULT_MAX_GAP = 10


@dataclass(frozen=True)
class CsvSchema:
    timestamp_col: str = "timestamp"
    value_col: str = "value"
    label_col: str = "label"


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    Timestamped scalar sequence. `labels` is all zero when the source had no label column
    (`has_labels` tells the two cases apart); `filled` marks points created by imputation.
    """

    timestamps: np.ndarray
    values: np.ndarray
    labels: np.ndarray = None
    filled: np.ndarray = None
    has_labels: bool = False

    def __post_init__(self):
        timestamps = np.asarray(self.timestamps, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        n = len(values)
        labels = np.zeros(n, dtype=np.int8) if self.labels is None else as_binary_array(self.labels, "labels")
        filled = np.zeros(n, dtype=np.int8) if self.filled is None else as_binary_array(self.filled, "filled")
        if not (len(timestamps) == n == len(labels) == len(filled)):
            raise ArgumentError(
                "timestamps, values, labels and filled must have the same length, got {}".format(
                    (len(timestamps), n, len(labels), len(filled))
                )
            )
        if n > 1 and np.any(np.diff(timestamps) <= 0):
            raise DataError("timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", timestamps)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "filled", filled)

    def __len__(self):
        return len(self.values)

    def slice(self, start, stop):
        return TimeSeries(
            self.timestamps[start:stop],
            self.values[start:stop],
            self.labels[start:stop],
            self.filled[start:stop],
            self.has_labels,
        )

    def with_values(self, values):
        return TimeSeries(self.timestamps, values, self.labels, self.filled, self.has_labels)


@dataclass(frozen=True)
class NormStats:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ArgumentError("std must be strictly positive, got {}".format(self.std))


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.35
    val_fraction: float = 0.15

    def __post_init__(self):
        for name in ("train_fraction", "val_fraction"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ArgumentError("{} must lie in (0, 1), got {}".format(name, value))
        if self.train_fraction + self.val_fraction >= 1:
            raise ArgumentError("train_fraction + val_fraction must be below 1, nothing is left for test")

    def boundaries(self, n):
        return int(np.floor(n * self.train_fraction)), int(np.floor(n * (self.train_fraction + self.val_fraction)))


def _numeric_column(frame, column, integral=False):
    raw = frame[column]
    parsed = pd.to_numeric(raw, errors="coerce")
    bad = parsed.isna() | ~np.isfinite(parsed.astype(float))
    if integral:
        bad |= parsed.notna() & (parsed != np.floor(parsed))
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        # header is line 1
        raise ParseError(
            "column {!r}, line {}: cannot read {!r} as a {}".format(
                column, row + 2, raw.iloc[row], "integer" if integral else "number"
            )
        )
    if integral:
        return parsed.to_numpy()
    # numpy parses through float(), which is correctly rounded
    return raw.to_numpy(dtype=object).astype(np.float64)


def read_frame(path, **kwargs):
    """ pandas.read_csv with its failures reported as data errors naming `path` """
    try:
        return pd.read_csv(path, encoding="utf-8", **kwargs)
    except pd.errors.EmptyDataError:
        raise DataError("{} is empty, a header row is needed".format(path))
    except pd.errors.ParserError as e:
        raise ParseError("{} is not a well-formed CSV: {}".format(path, str(e).strip()))
    except UnicodeDecodeError as e:
        raise ParseError("{} is not UTF-8 text (byte {} at offset {})".format(path, hex(e.object[e.start]), e.start))


def ingest_csv(path, schema=CsvSchema()):
    """ Read a UTF-8 CSV with a header row into a TimeSeries sorted by timestamp """
    path = Path(path)
    if not path.is_file():
        raise DataError("input file {} does not exist".format(path))
    frame = read_frame(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    for column in (schema.timestamp_col, schema.value_col):
        if column not in frame.columns:
            raise SchemaError(
                "column {!r} not found in {} (columns: {})".format(column, path, ", ".join(frame.columns))
            )
    if frame.empty:
        raise DataError("{} contains no rows".format(path))

    timestamps = _numeric_column(frame, schema.timestamp_col, integral=True).astype(np.int64)
    values = _numeric_column(frame, schema.value_col).astype(np.float64)
    has_labels = bool(schema.label_col) and schema.label_col in frame.columns
    if has_labels:
        labels = _numeric_column(frame, schema.label_col, integral=True)
        if not np.isin(labels, (0, 1)).all():
            row = int(np.flatnonzero(~np.isin(labels, (0, 1)))[0])
            raise ParseError("column {!r}, line {}: labels must be 0 or 1".format(schema.label_col, row + 2))
        labels = labels.astype(np.int8)
    else:
        labels = np.zeros(len(values), dtype=np.int8)

    order = np.argsort(timestamps, kind="mergesort")
    timestamps, values, labels = timestamps[order], values[order], labels[order]
    duplicated = np.flatnonzero(np.diff(timestamps) == 0)
    if duplicated.size:
        raise DataError("duplicate timestamp {} in {}".format(timestamps[duplicated[0]], path))

    log.debug("read %d rows from %s (labels: %s)", len(values), path, has_labels)
    return TimeSeries(timestamps, values, labels, None, has_labels)


def infer_interval(series):
    """ The most common timestamp step """
    if len(series) < 2:
        raise ArgumentError("need at least 2 points to infer the sampling interval")
    steps, counts = np.unique(np.diff(series.timestamps), return_counts=True)
    return int(steps[np.argmax(counts)])


def impute_missing(series, expected_interval, max_gap=DEFAULT_MAX_GAP):
    """ Fill every gap of k intervals with linearly interpolated, flagged, normal points """
    if len(series) < 2:
        raise ArgumentError("imputation needs at least 2 points, got {}".format(len(series)))
    if expected_interval <= 0:
        raise ArgumentError("expected_interval must be positive, got {}".format(expected_interval))

    steps = np.diff(series.timestamps)
    if np.any(steps % expected_interval):
        at = int(np.flatnonzero(steps % expected_interval)[0])
        raise ImputationError(
            "timestamps {} and {} are not aligned on an interval of {}".format(
                series.timestamps[at], series.timestamps[at + 1], expected_interval
            )
        )
    gaps = steps // expected_interval
    if gaps.max() > max_gap:
        at = int(np.argmax(gaps))
        raise ImputationError(
            "gap of {} intervals after timestamp {} exceeds the maximum of {}: series too sparse".format(
                gaps[at], series.timestamps[at], max_gap
            )
        )
    if gaps.max() == 1:
        return series

    timestamps = np.arange(series.timestamps[0], series.timestamps[-1] + 1, expected_interval, dtype=np.int64)
    original = np.isin(timestamps, series.timestamps)
    values = np.interp(timestamps, series.timestamps, series.values)
    values[original] = series.values
    labels = np.zeros(len(timestamps), dtype=np.int8)
    labels[original] = series.labels
    filled = (~original).astype(np.int8)
    filled[original] = series.filled
    log.info("imputed %d missing points", int((~original).sum()))
    return TimeSeries(timestamps, values, labels, filled, series.has_labels)


def normalize(series, stats=None):
    """ z-score the values; statistics default to the series' own (population std) """
    if len(series) == 0:
        raise ArgumentError("cannot normalize an empty series")
    if stats is None:
        std = float(np.std(series.values))
        stats = NormStats(float(np.mean(series.values)), std if std > 0 else 1.0)
    return series.with_values((series.values - stats.mean) / stats.std), stats


def denormalize(values, stats):
    return np.asarray(values, dtype=np.float64) * stats.std + stats.mean


def split(series, fractions=SplitSpec(), total_window=None):
    """
    Chronological, contiguous train/validation/test pieces. With a total_window every piece
    must hold at least total_window + 1 points.
    """
    min_length = 1 if total_window is None else total_window + 1
    n = len(series)
    first, second = fractions.boundaries(n)
    lengths = (first, second - first, n - second)
    if min(lengths) < min_length:
        test_fraction = 1 - fractions.train_fraction - fractions.val_fraction
        smallest = min(fractions.train_fraction, fractions.val_fraction, test_fraction)
        needed = int(np.ceil(min_length / smallest))
        raise SplitError(
            "series of length {} splits into {} points; every piece needs at least {} "
            "(minimum series length about {})".format(n, lengths, min_length, needed)
        )
    return series.slice(0, first), series.slice(first, second), series.slice(second, n)
