"""
Frequency features for both branches.

Windows are moved to the frequency domain with a real FFT and packed into exactly `w` reals,
``[Re X_0, Re X_1, Im X_1, ..., Re X_{w/2-1}, Im X_{w/2-1}, Re X_{w/2}]``. The imaginary
parts of X_0 and X_{w/2} are always zero for a real window, so nothing is lost. The transform
itself is numpy's pocketfft, which handles any length (48 is not a power of two).

Every window fed to a branch is ``spectrum || raw window`` (the raw values are the covariate);
with covariates disabled only the spectrum is used.
"""

from dataclasses import dataclass

import numpy as np

from cslstm.error import ArgumentError, RangeError, ShapeError


def _check_even(w):
    if w < 2 or w % 2:
        raise ArgumentError("window length must be even and at least 2, got {}".format(w))


def rfft(window):
    """ Packed, unnormalized real FFT over the last axis """
    window = np.asarray(window, dtype=np.float64)
    w = window.shape[-1]
    _check_even(w)
    spectrum = np.fft.rfft(window, axis=-1)
    packed = np.empty(window.shape, dtype=np.float64)
    packed[..., 0] = spectrum[..., 0].real
    packed[..., 1:-1:2] = spectrum[..., 1:-1].real
    packed[..., 2:-1:2] = spectrum[..., 1:-1].imag
    packed[..., -1] = spectrum[..., -1].real
    return packed


def irfft(packed, w):
    """ Inverse of `rfft`; carries the 1/w normalization """
    packed = np.asarray(packed, dtype=np.float64)
    _check_even(w)
    if packed.shape[-1] != w:
        raise ArgumentError("packed spectrum has {} reals, expected {}".format(packed.shape[-1], w))
    spectrum = np.zeros(packed.shape[:-1] + (w // 2 + 1,), dtype=np.complex128)
    spectrum[..., 0] = packed[..., 0]
    spectrum[..., 1:-1] = packed[..., 1:-1:2] + 1j * packed[..., 2:-1:2]
    spectrum[..., -1] = packed[..., -1]
    return np.fft.irfft(spectrum, n=w, axis=-1)


def irfft_matrix(w):
    """ M with irfft(p) == M @ p, so the inverse transform can sit inside a differentiable graph """
    return irfft(np.eye(w), w).T


def spectrum_energy(packed):
    """ Energy of a packed spectrum; equals w * sum(x**2) for the window it came from """
    packed = np.asarray(packed, dtype=np.float64)
    weights = np.full(packed.shape[-1], 2.0)
    weights[0] = weights[-1] = 1.0
    return np.sum(weights * packed ** 2, axis=-1)


def window_features(windows, covariate=True):
    """ Rows of ``spectrum || raw`` (or the spectrum alone) for a stack of windows """
    windows = np.asarray(windows, dtype=np.float64)
    spectrum = rfft(windows)
    if covariate:
        return np.concatenate([spectrum, windows], axis=-1)
    return spectrum


@dataclass(frozen=True, eq=False)
class WindowBatch:
    """
    Model input for one target position (or, stacked, for a batch of them).
    `inputs` holds one feature row per window, `covariates` the raw windows,
    `target*` what the branch should predict.
    """

    inputs: np.ndarray
    covariates: np.ndarray
    target: np.ndarray
    target_mask: np.ndarray
    target_denoised: np.ndarray

    def __post_init__(self):
        if self.inputs.shape[:-1] != self.covariates.shape[:-1]:
            raise ShapeError(
                "inputs {} and covariates {} disagree on the window count".format(
                    self.inputs.shape, self.covariates.shape
                )
            )
        if not (self.target.shape == self.target_mask.shape == self.target_denoised.shape):
            raise ShapeError(
                "target {}, target_mask {} and target_denoised {} must have identical shapes".format(
                    self.target.shape, self.target_mask.shape, self.target_denoised.shape
                )
            )

    def __len__(self):
        return self.inputs.shape[0]

    @classmethod
    def stack(cls, rows):
        rows = list(rows)
        return cls(*(np.stack([getattr(r, f) for r in rows]) for f in cls.__dataclass_fields__))

    def take(self, index):
        return WindowBatch(*(getattr(self, f)[index] for f in self.__dataclass_fields__))


def _targets(values, mask, denoised, start, stop):
    if stop > len(values):
        raise RangeError("target [{}, {}) runs past the end of a series of length {}".format(start, stop, len(values)))
    return (
        np.asarray(values[start:stop], dtype=np.float64),
        np.asarray(mask[start:stop], dtype=np.float64),
        np.asarray(denoised[start:stop], dtype=np.float64),
    )


def seasonal_windows(values, w_s, total, t):
    """ The `total` points before t cut into total / w_s consecutive windows """
    if total % w_s:
        raise ArgumentError("total window {} is not a multiple of the seasonal window {}".format(total, w_s))
    if t < total:
        raise RangeError("position {} has only {} points of history, {} needed".format(t, t, total))
    if t > len(values):
        raise RangeError("position {} lies beyond a series of length {}".format(t, len(values)))
    return np.asarray(values[t - total:t], dtype=np.float64).reshape(total // w_s, w_s)


def extract_seasonal(values, mask, denoised, w_s, total, t, covariate=True):
    """ Non-overlapping windows before t; the target is the next seasonal window [t, t + w_s) """
    _check_even(w_s)
    windows = seasonal_windows(values, w_s, total, t)
    target, target_mask, target_denoised = _targets(values, mask, denoised, t, t + w_s)
    return WindowBatch(window_features(windows, covariate), windows, target, target_mask, target_denoised)


def context_offsets(w_c, stride, history):
    if not 1 <= stride < w_c:
        raise ArgumentError(
            "context windows must overlap: need 1 <= stride < window, got stride {} and window {}".format(stride, w_c)
        )
    if history < w_c or (history - w_c) % stride:
        raise ArgumentError(
            "context history {} must be at least the window {} and leave a multiple of the stride {}".format(
                history, w_c, stride
            )
        )
    return np.arange(0, history - w_c + 1, stride)


def context_windows(values, w_c, stride, history, t):
    """ Overlapping windows over the `history` points before t """
    offsets = context_offsets(w_c, stride, history)
    if t < history:
        raise RangeError("position {} has only {} points of history, {} needed".format(t, t, history))
    if t > len(values):
        raise RangeError("position {} lies beyond a series of length {}".format(t, len(values)))
    recent = np.asarray(values[t - history:t], dtype=np.float64)
    return recent[offsets[:, None] + np.arange(w_c)]


def extract_context(values, mask, denoised, w_c, stride, history, t, covariate=True):
    """ Overlapping windows before t; the target is the single next point x_t """
    _check_even(w_c)
    windows = context_windows(values, w_c, stride, history, t)
    target, target_mask, target_denoised = _targets(values, mask, denoised, t, t + 1)
    return WindowBatch(window_features(windows, covariate), windows, target, target_mask, target_denoised)
