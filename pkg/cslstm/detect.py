"""
Anomaly scores from the branch forecasts, point-adjusted and delay-adjusted predictions,
and the best-F1 threshold sweep.

Both adjustments are applied to the scores rather than to each binarized prediction: every
point of a labeled segment takes the maximum score over the part of the segment that may
trigger it (the whole segment, or its first k + 1 points for the delay variant). Thresholding
those reconstructed scores at t gives exactly the adjusted predictions of ``score >= t``, so a
single precision/recall curve covers every candidate threshold.
"""

import logging
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np
from sklearn.metrics import precision_recall_curve

from cslstm.error import AlignmentError, ArgumentError, RangeError
from cslstm.spectral import WindowBatch, context_windows, seasonal_windows, window_features
from cslstm.utils import as_binary_array, as_float_array

log = logging.getLogger(__name__)

DELAY_K = {"yahoo": 3, "kpi": 7, "wsd": 40, "nab": 150}
MODES = ("best", "delay")


@dataclass(frozen=True, eq=False)
class Forecasts:
    """ Per-point (mu, sigma) of each branch over [start, stop); None for a disabled branch """

    start: int
    stop: int
    mu_s: Optional[np.ndarray] = None
    sigma_s: Optional[np.ndarray] = None
    mu_c: Optional[np.ndarray] = None
    sigma_c: Optional[np.ndarray] = None

    def __len__(self):
        return self.stop - self.start

    def branches(self):
        found = []
        if self.mu_s is not None:
            found.append((self.mu_s, self.sigma_s))
        if self.mu_c is not None:
            found.append((self.mu_c, self.sigma_c))
        return found


@dataclass(frozen=True, eq=False)
class ScoreSeries:
    timestamps: np.ndarray
    values: np.ndarray
    score: np.ndarray
    mu_s: Optional[np.ndarray] = None
    sigma_s: Optional[np.ndarray] = None
    mu_c: Optional[np.ndarray] = None
    sigma_c: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.score)


@dataclass(frozen=True)
class SweepResult:
    f1: float
    precision: float
    recall: float
    threshold: float


@dataclass(frozen=True)
class EvalReport:
    best_f1: float
    best_precision: float
    best_recall: float
    best_threshold: float
    delay_f1: float
    delay_precision: float
    delay_recall: float
    delay_threshold: float
    k: int
    warning: bool = False
    name: str = ""

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def __str__(self):
        head = "{}: ".format(self.name) if self.name else ""
        text = (
            "{}best_f1={:.4f} precision={:.4f} recall={:.4f} threshold={:.6g} | "
            "delay_f1={:.4f} precision={:.4f} recall={:.4f} threshold={:.6g} (k={})".format(
                head, self.best_f1, self.best_precision, self.best_recall, self.best_threshold,
                self.delay_f1, self.delay_precision, self.delay_recall, self.delay_threshold, self.k,
            )
        )
        if self.warning:
            text += " WARNING: no labeled anomalies, metrics reported as 0"
        return text


def _inference_batch(inputs, windows):
    rows = np.zeros(inputs.shape[:1] + (1,))
    return WindowBatch(inputs, windows, rows, rows, rows)


def _seasonal_forecast(model, values, anchors):
    c = model.config
    windows = np.stack([seasonal_windows(values, c.seasonal_window, c.total_window, a) for a in anchors])
    forecast = model.seasonal_forward(_inference_batch(window_features(windows, c.covariate), windows))
    return forecast.mu.data, forecast.sigma


def _contextual_forecast(model, values, positions):
    c = model.config
    windows = np.stack(
        [context_windows(values, c.context_window, c.context_stride, c.context_history, t) for t in positions]
    )
    forecast = model.contextual_forward(_inference_batch(window_features(windows, c.covariate), windows))
    return forecast.mu.data.reshape(-1), forecast.sigma.reshape(-1)


def _forecast_batched(model, values, start, stop, batch_size):
    c = model.config
    out = {}
    if c.seasonal:
        anchors = np.arange(start, stop, c.seasonal_window)
        parts = [
            _seasonal_forecast(model, values, anchors[i:i + batch_size]) for i in range(0, len(anchors), batch_size)
        ]
        out["mu_s"] = np.concatenate([mu for mu, _ in parts]).reshape(-1)[:stop - start]
        out["sigma_s"] = np.concatenate([sigma for _, sigma in parts]).reshape(-1)[:stop - start]
    if c.contextual:
        parts = [
            _contextual_forecast(model, values, range(first, min(first + batch_size, stop)))
            for first in range(start, stop, batch_size)
        ]
        out["mu_c"] = np.concatenate([mu for mu, _ in parts])
        out["sigma_c"] = np.concatenate([sigma for _, sigma in parts])
    return out


def _forecast_cleaned(model, values, start, stop, clean_c):
    """
    Walk the seasonal windows in order. Observed points further than clean_c seasonal sigmas
    from the seasonal forecast are replaced by that forecast in the history later forecasts
    read, so an anomaly does not distort the windows after it. The walk starts at the earliest
    window boundary before `start` that has full history.
    """
    c = model.config
    w = c.seasonal_window
    history = values.copy()
    first = start - ((start - c.total_window) // w) * w
    parts = {"mu_s": [], "sigma_s": [], "mu_c": [], "sigma_c": []}
    replaced = 0
    for anchor in range(first, stop, w):
        end = min(anchor + w, stop)
        mu, sigma = _seasonal_forecast(model, history, [anchor])
        mu, sigma = mu[0, :end - anchor], sigma[0, :end - anchor]
        far = np.abs(values[anchor:end] - mu) > clean_c * sigma
        history[anchor:end][far] = mu[far]
        replaced += int(far.sum())
        if anchor < start:
            continue
        parts["mu_s"].append(mu)
        parts["sigma_s"].append(sigma)
        if c.contextual:
            mu_c, sigma_c = _contextual_forecast(model, history, range(anchor, end))
            parts["mu_c"].append(mu_c)
            parts["sigma_c"].append(sigma_c)
    log.info("replaced %d of %d points by their seasonal forecast", replaced, stop - first)
    return {name: np.concatenate(arrays) for name, arrays in parts.items() if arrays}


def forecast_series(model, values, start, stop=None, batch_size=512, clean_c=None):
    """
    One seasonal and one contextual (mu, sigma) for every point in [start, stop). Seasonal
    forecasts are issued every w_s points from `start` and each covers the next w_s points;
    contextual forecasts are issued for every point. Runs without a tape.

    With a positive `clean_c` and the seasonal branch enabled, forecasts read a history in
    which points far outside the seasonal forecast are replaced by it (see _forecast_cleaned).
    """
    c = model.config
    values = as_float_array(values, "values")
    stop = len(values) if stop is None else stop
    if start < c.history:
        raise RangeError("forecasting from position {} needs {} points of history".format(start, c.history))
    if not start < stop <= len(values):
        raise ArgumentError("empty or out-of-range forecast interval [{}, {})".format(start, stop))
    if clean_c and c.seasonal:
        out = _forecast_cleaned(model, values, start, stop, clean_c)
    else:
        out = _forecast_batched(model, values, start, stop, batch_size)
    log.debug("forecast %d points from position %d", stop - start, start)
    return Forecasts(start, stop, **out)


def score(forecasts, observed, timestamps=None, labels=None):
    """
    score_t = mean over the enabled branches of ((x_t - mu_t) / sigma_t)^2
    """
    observed = as_float_array(observed, "observed")
    branches = forecasts.branches()
    if not branches:
        raise AlignmentError("no branch forecasts to score with")
    terms = []
    for mu, sigma in branches:
        mu = np.asarray(mu, dtype=np.float64)
        sigma = np.asarray(sigma, dtype=np.float64)
        if mu.shape != observed.shape or sigma.shape != observed.shape:
            raise AlignmentError(
                "forecasts cover {} points, {} observed points need scoring".format(len(mu), len(observed))
            )
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma)) and np.all(sigma > 0)):
            raise AlignmentError("forecasts have gaps (non-finite mean or non-positive sigma)")
        terms.append(((observed - mu) / sigma) ** 2)
    total = np.mean(terms, axis=0)
    if timestamps is None:
        timestamps = np.arange(len(observed))
    return ScoreSeries(
        timestamps=np.asarray(timestamps),
        values=observed,
        score=total,
        mu_s=forecasts.mu_s,
        sigma_s=forecasts.sigma_s,
        mu_c=forecasts.mu_c,
        sigma_c=forecasts.sigma_c,
        labels=None if labels is None else as_binary_array(labels, "labels"),
    )


def label_segments(labels):
    """ (start, stop) of every maximal run of ones """
    labels = as_binary_array(labels, "labels")
    edges = np.diff(np.concatenate([[0], labels, [0]]))
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)))


def _check_pair(pred, labels):
    pred = as_binary_array(pred, "pred")
    labels = as_binary_array(labels, "labels")
    if len(pred) != len(labels):
        raise ArgumentError("pred has {} points, labels have {}".format(len(pred), len(labels)))
    return pred, labels


def point_adjust(pred, labels):
    """ A labeled segment with at least one detection counts as fully detected """
    pred, labels = _check_pair(pred, labels)
    adjusted = pred.copy()
    for s, e in label_segments(labels):
        if adjusted[s:e].any():
            adjusted[s:e] = 1
    return adjusted


def delay_adjust(pred, labels, k):
    """
    A labeled segment starting at s counts only when detected at or before s + k; detected
    segments are filled, missed segments are cleared.
    """
    if k < 0:
        raise ArgumentError("delay k must be non-negative, got {}".format(k))
    pred, labels = _check_pair(pred, labels)
    adjusted = pred.copy()
    for s, e in label_segments(labels):
        adjusted[s:e] = 1 if pred[s:min(e, s + k + 1)].any() else 0
    return adjusted


def adjusted_scores(scores, labels, mode="best", k=7):
    """ Scores whose thresholding yields the point-adjusted (or delay-adjusted) predictions """
    if mode not in MODES:
        raise ArgumentError("mode must be one of {}, got {!r}".format(MODES, mode))
    if mode == "delay" and k < 0:
        raise ArgumentError("delay k must be non-negative, got {}".format(k))
    scores = as_float_array(getattr(scores, "score", scores), "scores")
    labels = as_binary_array(labels, "labels")
    if len(scores) != len(labels):
        raise ArgumentError("scores have {} points, labels have {}".format(len(scores), len(labels)))
    adjusted = scores.copy()
    for s, e in label_segments(labels):
        reach = e if mode == "best" else min(e, s + k + 1)
        adjusted[s:e] = scores[s:reach].max()
    return adjusted


def sweep(adjusted, labels):
    """ Max-F1 threshold over all distinct values of already adjusted scores, ties to the higher threshold """
    labels = as_binary_array(labels, "labels")
    if not labels.any():
        return SweepResult(0.0, 0.0, 0.0, float("inf"))
    precision, recall, thresholds = precision_recall_curve(labels, adjusted)
    # the final (precision 1, recall 0) point has no threshold
    precision, recall = precision[:-1], recall[:-1]
    denom = precision + recall
    f1 = np.divide(2 * precision * recall, denom, out=np.zeros_like(denom), where=denom > 0)
    best = np.flatnonzero(f1 == f1.max())[-1]
    return SweepResult(float(f1[best]), float(precision[best]), float(recall[best]), float(thresholds[best]))


def best_f1_sweep(scores, labels, mode="best", k=7):
    return sweep(adjusted_scores(scores, labels, mode, k), labels)


def evaluate(scores, labels, k=7, name=""):
    """ Best-F1 and Delay-F1 of one series """
    labels = as_binary_array(labels, "labels")
    warning = not labels.any()
    if warning:
        log.warning("%sno labeled anomalies, reporting zero metrics", "{}: ".format(name) if name else "")
    best = best_f1_sweep(scores, labels, "best", k)
    delay = best_f1_sweep(scores, labels, "delay", k)
    return _report(best, delay, k, warning, name)


def evaluate_pooled(series, k=7, name="pooled"):
    """
    One report over several (scores, labels) pairs. Each series is adjusted on its own so
    segments never span two series, then the adjusted scores are swept together.
    """
    series = list(series)
    if not series:
        raise ArgumentError("nothing to evaluate")
    labels = np.concatenate([as_binary_array(l, "labels") for _, l in series])
    best = sweep(np.concatenate([adjusted_scores(s, l, "best", k) for s, l in series]), labels)
    delay = sweep(np.concatenate([adjusted_scores(s, l, "delay", k) for s, l in series]), labels)
    warning = not labels.any()
    if warning:
        log.warning("%s: no labeled anomalies, reporting zero metrics", name)
    return _report(best, delay, k, warning, name)


def _report(best, delay, k, warning, name):
    return EvalReport(
        best_f1=best.f1,
        best_precision=best.precision,
        best_recall=best.recall,
        best_threshold=best.threshold,
        delay_f1=delay.f1,
        delay_precision=delay.precision,
        delay_recall=delay.recall,
        delay_threshold=delay.threshold,
        k=k,
        warning=warning,
        name=name,
    )
