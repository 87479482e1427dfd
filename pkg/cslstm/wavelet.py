"""
Noise decomposition by wavelet shrinkage.

A series is split into an approximation band and `level` detail bands with a discrete wavelet
transform; the noise level of every detail band is estimated with the median absolute
deviation, every band is soft-thresholded with its own universal threshold, and the signal is
rebuilt. Trend and season live in the approximation and in the large detail coefficients and
survive; only the noise is removed.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import List

import numpy as np
import pywt
from scipy.stats import norm

from cslstm.error import ArgumentError, CorruptionError
from cslstm.utils import as_float_array

log = logging.getLogger(__name__)

BASES = ("haar", "db4")
BOUNDARY_MODE = "symmetric"
DEFAULT_MAX_LEVEL = 4
# MAD of a standard normal, 0.6744897501960817
MAD_NORMAL_CONSTANT = norm.ppf(0.75)


@dataclass(frozen=True, eq=False)
class WaveletBasis:
    name: str
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray

    @classmethod
    def get(cls, name="db4"):
        if name not in BASES:
            raise ArgumentError("unknown wavelet basis {!r}, choose one of {}".format(name, ", ".join(BASES)))
        w = pywt.Wavelet(name)
        return cls(name, *(np.asarray(f, dtype=np.float64) for f in (w.dec_lo, w.dec_hi, w.rec_lo, w.rec_hi)))

    @property
    def wavelet(self):
        return pywt.Wavelet(self.name)

    @property
    def filter_length(self):
        return len(self.dec_lo)


@dataclass(frozen=True, eq=False)
class WaveletDecomposition:
    """ c_A at level L plus the detail bands ordered coarsest (level L) to finest (level 1) """

    approx: np.ndarray
    details: List[np.ndarray]
    level: int
    original_length: int
    boundary_mode: str = BOUNDARY_MODE

    def coefficients(self):
        return [self.approx] + list(self.details)


def max_level(length):
    return int(np.floor(np.log2(length))) if length >= 2 else 0


def default_level(length):
    return min(DEFAULT_MAX_LEVEL, max_level(length))


def band_lengths(length, basis, level):
    """ Expected coefficient count per level, finest first, under symmetric extension """
    lengths = []
    for _ in range(level):
        length = pywt.dwt_coeff_len(length, basis.filter_length, BOUNDARY_MODE)
        lengths.append(length)
    return lengths


def wavedec(signal, basis, level):
    signal = as_float_array(signal, "signal")
    if len(signal) < 2:
        raise ArgumentError("wavelet decomposition needs at least 2 samples, got {}".format(len(signal)))
    if not 1 <= level <= max_level(len(signal)):
        raise ArgumentError(
            "level must lie in [1, {}] for a signal of length {}, got {}".format(
                max_level(len(signal)), len(signal), level
            )
        )
    with warnings.catch_warnings():
        # pywt warns when long filters see boundary effects on every coefficient
        warnings.simplefilter("ignore", UserWarning)
        coeffs = pywt.wavedec(signal, basis.wavelet, mode=BOUNDARY_MODE, level=level)
    return WaveletDecomposition(coeffs[0], coeffs[1:], level, len(signal))


def _check_bands(decomp, basis):
    if len(decomp.details) != decomp.level:
        raise CorruptionError(
            "decomposition of level {} carries {} detail bands".format(decomp.level, len(decomp.details))
        )
    expected = band_lengths(decomp.original_length, basis, decomp.level)
    # details run coarsest first
    for i, (band, want) in enumerate(zip(decomp.details, reversed(expected))):
        if len(band) != want:
            raise CorruptionError(
                "detail band of level {} has {} coefficients, expected {} for length {}".format(
                    decomp.level - i, len(band), want, decomp.original_length
                )
            )
    if len(decomp.approx) != expected[-1]:
        raise CorruptionError(
            "approximation band has {} coefficients, expected {}".format(len(decomp.approx), expected[-1])
        )


def waverec(decomp, basis):
    _check_bands(decomp, basis)
    signal = pywt.waverec(decomp.coefficients(), basis.wavelet, mode=BOUNDARY_MODE)
    return np.asarray(signal[: decomp.original_length], dtype=np.float64)


def mad_sigma(coeffs):
    """ Robust noise level: median(|c|) / Phi^-1(0.75) """
    coeffs = as_float_array(coeffs, "coeffs")
    if coeffs.size == 0:
        raise ArgumentError("cannot estimate the noise level of an empty band")
    return float(np.median(np.abs(coeffs)) / MAD_NORMAL_CONSTANT)


def universal_threshold(sigma, n):
    if n < 2:
        raise ArgumentError("universal threshold needs a signal length of at least 2, got {}".format(n))
    if sigma < 0:
        raise ArgumentError("sigma must be non-negative, got {}".format(sigma))
    return float(sigma * np.sqrt(2.0 * np.log(n)))


def soft_threshold(coeffs, lam):
    if lam < 0:
        raise ArgumentError("threshold must be non-negative, got {}".format(lam))
    # pywt.threshold gives 0/0 = nan for zero coefficients at lam == 0
    coeffs = np.asarray(coeffs, dtype=np.float64)
    return np.sign(coeffs) * np.maximum(np.abs(coeffs) - lam, 0.0)


def threshold_decomposition(decomp):
    """ Soft-threshold every detail band with its own level-wise universal threshold """
    details = []
    for band in decomp.details:
        lam = universal_threshold(mad_sigma(band), decomp.original_length)
        details.append(soft_threshold(band, lam))
    return WaveletDecomposition(decomp.approx, details, decomp.level, decomp.original_length)


def denoise(signal, basis=None, level=None):
    """ Decompose, threshold the detail bands, reconstruct; same length as the input """
    basis = basis or WaveletBasis.get()
    signal = as_float_array(signal, "signal")
    level = default_level(len(signal)) if level is None else level
    decomp = wavedec(signal, basis, level)
    cleaned = waverec(threshold_decomposition(decomp), basis)
    log.debug(
        "denoised %d points with %s level %d, removed energy %.6g",
        len(signal), basis.name, level, float(np.sum((signal - cleaned) ** 2)),
    )
    return cleaned
