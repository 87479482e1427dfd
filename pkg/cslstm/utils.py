import os

import numpy as np

from cslstm.error import ArgumentError, ConfigError, NumericError

THREADS_ENV = "CSLSTM_THREADS"


def thread_count():
    """ Parallelism cap from ``CSLSTM_THREADS``; 1 (fully reproducible) when unset """
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError("{} must be a positive integer, got {!r}".format(THREADS_ENV, raw))
    if n < 1:
        raise ConfigError("{} must be a positive integer, got {!r}".format(THREADS_ENV, raw))
    return n


def as_float_array(values, name="values", ndim=1):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != ndim:
        raise ArgumentError("{} must be {}-dimensional, got shape {}".format(name, ndim, arr.shape))
    return arr


def as_binary_array(values, name="mask"):
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ArgumentError("{} must be 1-dimensional, got shape {}".format(name, arr.shape))
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ArgumentError("{} may only contain 0 and 1".format(name))
    return arr.astype(np.int8)


def check_finite(values, what):
    if not np.all(np.isfinite(values)):
        raise NumericError("non-finite {}".format(what))
