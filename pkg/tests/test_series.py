import numpy as np
import pytest

from cslstm.error import DataError, ImputationError, ParseError, SchemaError, SplitError
from cslstm.series import (
    CsvSchema,
    NormStats,
    SplitSpec,
    TimeSeries,
    denormalize,
    impute_missing,
    infer_interval,
    ingest_csv,
    normalize,
    split,
)


def test_ingest_sorts_by_timestamp(write_csv):
    path = write_csv("a.csv", "timestamp,value,label\n30,3.0,0\n10,1.0,1\n20,2.0,0\n")
    series = ingest_csv(path)
    assert series.timestamps.tolist() == [10, 20, 30]
    assert series.values.tolist() == [1.0, 2.0, 3.0]
    assert series.labels.tolist() == [1, 0, 0]
    assert series.has_labels


def test_ingest_without_labels(write_csv):
    series = ingest_csv(write_csv("a.csv", "timestamp,value\n1,0.5\n2,0.25\n"))
    assert not series.has_labels
    assert series.labels.tolist() == [0, 0]


def test_ingest_custom_schema(write_csv):
    path = write_csv("a.csv", "ts,kpi\n1,4\n2,5\n")
    series = ingest_csv(path, CsvSchema(timestamp_col="ts", value_col="kpi"))
    assert series.values.tolist() == [4.0, 5.0]


@pytest.mark.parametrize("text, error, fragment", [
    ("timestamp,value\n1,1.0\n1,2.0\n", DataError, "duplicate timestamp 1"),
    ("timestamp,val\n1,1.0\n", SchemaError, "'value'"),
    ("timestamp,value\n1,1.0\n2,abc\n", ParseError, "line 3"),
    ("timestamp,value,label\n1,1.0,2\n", ParseError, "line 2"),
    ("timestamp,value\n", DataError, "no rows"),
])
def test_ingest_errors(write_csv, text, error, fragment):
    with pytest.raises(error) as excinfo:
        ingest_csv(write_csv("bad.csv", text))
    assert fragment in str(excinfo.value)


def test_ingest_missing_file_names_path(tmp_path):
    with pytest.raises(DataError) as excinfo:
        ingest_csv(tmp_path / "nope.csv")
    assert "nope.csv" in str(excinfo.value)


def test_infer_interval_picks_most_common_step():
    series = TimeSeries([0, 60, 120, 300, 360], [1, 2, 3, 4, 5])
    assert infer_interval(series) == 60


def test_impute_fills_gap_linearly_and_flags():
    series = TimeSeries([0, 1, 4, 5], [0.0, 1.0, 4.0, 5.0], labels=[0, 1, 0, 0])
    filled = impute_missing(series, 1)
    assert filled.timestamps.tolist() == [0, 1, 2, 3, 4, 5]
    assert np.allclose(filled.values, [0, 1, 2, 3, 4, 5])
    assert filled.filled.tolist() == [0, 0, 1, 1, 0, 0]
    assert filled.labels.tolist() == [0, 1, 0, 0, 0, 0]


def test_impute_without_gaps_returns_series():
    series = TimeSeries([0, 1, 2], [1.0, 2.0, 3.0])
    assert impute_missing(series, 1) is series


@pytest.mark.parametrize("timestamps, interval, max_gap", [
    ([0, 1, 13], 1, 10),
    ([0, 2, 5], 2, 10),
])
def test_impute_errors(timestamps, interval, max_gap):
    series = TimeSeries(timestamps, np.arange(len(timestamps), dtype=float))
    with pytest.raises(ImputationError):
        impute_missing(series, interval, max_gap)


def test_normalize_and_denormalize():
    series = TimeSeries([0, 1, 2, 3], [1.0, 2.0, 3.0, 4.0])
    normalized, stats = normalize(series)
    assert stats.mean == 2.5
    assert np.isclose(np.mean(normalized.values), 0.0)
    assert np.isclose(np.std(normalized.values), 1.0)
    assert np.allclose(denormalize(normalized.values, stats), series.values)


def test_normalize_constant_series_keeps_unit_std():
    _, stats = normalize(TimeSeries([0, 1, 2], [5.0, 5.0, 5.0]))
    assert stats == NormStats(5.0, 1.0)


def test_normalize_with_given_stats():
    normalized, stats = normalize(TimeSeries([0, 1], [3.0, 5.0]), NormStats(1.0, 2.0))
    assert normalized.values.tolist() == [1.0, 2.0]


def test_split_is_chronological_and_contiguous():
    series = TimeSeries(np.arange(100), np.arange(100, dtype=float))
    train, val, test = split(series)
    assert (len(train), len(val), len(test)) == (35, 15, 50)
    assert np.array_equal(np.concatenate([train.values, val.values, test.values]), series.values)


@pytest.mark.parametrize("n, total_window", [(20, 240), (10, 4), (100, 15)])
def test_split_too_short(n, total_window):
    series = TimeSeries(np.arange(n), np.zeros(n))
    with pytest.raises(SplitError) as excinfo:
        split(series, SplitSpec(), total_window=total_window)
    assert "minimum series length" in str(excinfo.value)


def test_split_pieces_hold_the_total_window():
    series = TimeSeries(np.arange(1000), np.zeros(1000))
    lengths = [len(p) for p in split(series, SplitSpec(0.5, 0.25), total_window=240)]
    assert lengths == [500, 250, 250]
    # val holds exactly 15 points, one more than the window
    assert [len(p) for p in split(TimeSeries(np.arange(100), np.zeros(100)), total_window=14)] == [35, 15, 50]


@pytest.mark.parametrize("fractions", [(0.0, 0.5), (0.6, 0.4), (0.5, 1.2)])
def test_split_spec_validation(fractions):
    with pytest.raises(ValueError):
        SplitSpec(*fractions)


def test_timestamps_must_increase():
    with pytest.raises(DataError):
        TimeSeries([0, 2, 1], [1.0, 2.0, 3.0])


@pytest.mark.parametrize("content, error", [
    (b"", DataError),
    (b"timestamp,value\n0,1.0\n1,2.0\xff\xfe\n", ParseError),
    (b"timestamp,value\n0,1.0\n1,2.0,7\n2,3.0\n", ParseError),
])
def test_unreadable_csv_is_a_data_error(tmp_path, content, error):
    path = tmp_path / "broken.csv"
    path.write_bytes(content)
    with pytest.raises(error) as excinfo:
        ingest_csv(path)
    assert "broken.csv" in str(excinfo.value)
