"""
Labeled synthetic series for smoke and acceptance runs.

The base signal is two sinusoids with periods w_s and 3 * w_s plus Gaussian noise (sd 0.05).
``point`` adds isolated upward spikes of 4 to 8 times the base signal's standard deviation at
a 0.5% rate, ``slow_rise`` adds segments of w_s to 2 * w_s points drifting linearly up to 3
times the signal amplitude (about one per 20 * w_s points), ``mixed`` adds both.
"""

import logging

import numpy as np

from cslstm.error import ArgumentError
from cslstm.series import TimeSeries

log = logging.getLogger(__name__)

KINDS = ("point", "slow_rise", "mixed")
NOISE_SD = 0.05
POINT_RATE = 0.005
SPIKE_RANGE = (4.0, 8.0)
DRIFT_FACTOR = 3.0
SEGMENT_SPACING = 20


def base_signal(length, seasonal_window):
    t = np.arange(length, dtype=np.float64)
    return np.sin(2 * np.pi * t / seasonal_window) + np.sin(2 * np.pi * t / (3 * seasonal_window))


def _slow_rises(values, labels, rng, seasonal_window, amplitude):
    n = len(values)
    count = max(1, n // (SEGMENT_SPACING * seasonal_window))
    block = n // count
    for i in range(count):
        length = int(rng.integers(seasonal_window, 2 * seasonal_window + 1))
        room = block - length - seasonal_window
        if room <= 0:
            continue
        start = i * block + seasonal_window + int(rng.integers(0, room))
        values[start:start + length] += DRIFT_FACTOR * amplitude * np.arange(1, length + 1) / length
        labels[start:start + length] = 1


def _spikes(values, labels, rng, level):
    n = len(values)
    candidates = np.flatnonzero(rng.random(n) < POINT_RATE)
    previous = -2
    for p in candidates:
        # isolated: never next to another spike or inside a segment
        if p - previous < 2 or labels[max(0, p - 1):p + 2].any():
            continue
        values[p] += rng.uniform(*SPIKE_RANGE) * level
        labels[p] = 1
        previous = p


def synthesize(kind="mixed", length=20000, seed=0, seasonal_window=48, total_window=None):
    if kind not in KINDS:
        raise ArgumentError("kind must be one of {}, got {!r}".format(", ".join(KINDS), kind))
    total_window = 5 * seasonal_window if total_window is None else total_window
    if length < 2 * total_window:
        raise ArgumentError("length {} is below twice the total window ({})".format(length, 2 * total_window))
    rng = np.random.default_rng(seed)
    clean = base_signal(length, seasonal_window)
    values = clean + rng.normal(0.0, NOISE_SD, length)
    labels = np.zeros(length, dtype=np.int8)
    if kind in ("slow_rise", "mixed"):
        _slow_rises(values, labels, rng, seasonal_window, float(np.max(np.abs(clean))))
    if kind in ("point", "mixed"):
        _spikes(values, labels, rng, float(np.std(clean)))
    log.info("synthesized %d %s points, %d labeled anomalous", length, kind, int(labels.sum()))
    return TimeSeries(np.arange(length), values, labels, has_labels=True)
