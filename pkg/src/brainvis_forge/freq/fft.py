"""Mixed-radix fast Fourier transform and magnitude spectra.

Cooley-Tukey decimation in time over the smallest prime factor, recursing on
the cofactor; prime lengths fall back to a direct DFT matrix.  This handles
any length, in particular 440 = 2^3 * 5 * 11, where a power-of-two-only
implementation would fail.  Twiddle tables are cached per (prime, length).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TWIDDLE_CACHE: dict[tuple[int, int], np.ndarray] = {}
_DFT_CACHE: dict[int, np.ndarray] = {}


def _smallest_prime_factor(n: int) -> int:
    if n % 2 == 0:
        return 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return f
        f += 2
    return n


def _dft_matrix(n: int) -> np.ndarray:
    mat = _DFT_CACHE.get(n)
    if mat is None:
        k = np.arange(n)
        mat = np.exp(-2j * np.pi * np.outer(k, k) / n)
        _DFT_CACHE[n] = mat
    return mat


def _twiddles(p: int, n: int) -> np.ndarray:
    tw = _TWIDDLE_CACHE.get((p, n))
    if tw is None:
        tw = np.exp(-2j * np.pi * np.outer(np.arange(p), np.arange(n)) / n)
        _TWIDDLE_CACHE[(p, n)] = tw
    return tw


def _fft_last_axis(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    p = _smallest_prime_factor(n)
    if p == n:
        return x @ _dft_matrix(n).T
    m = n // p
    # x[..., j*p + r] -> residue r, position j
    sub = np.stack([_fft_last_axis(x[..., r::p]) for r in range(p)], axis=-2)  # (..., p, m)
    ks = np.arange(n)
    gathered = sub[..., :, ks % m]  # (..., p, n)
    return np.sum(gathered * _twiddles(p, n), axis=-2)


def fft(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """Complex DFT along `axis` for any length >= 1."""
    x = np.asarray(x)
    if x.shape[axis] < 1:
        raise ValueError("fft: empty transform axis")
    moved = np.moveaxis(x, axis, -1).astype(np.complex128)
    return np.moveaxis(_fft_last_axis(moved), -1, axis)


@dataclass
class FreqSequence:
    """One-sided magnitude spectrum arranged bins-first: (n_bins, channels)."""

    magnitude: np.ndarray
    bin_resolution: float

    @property
    def n_bins(self) -> int:
        return self.magnitude.shape[0]


def fft_magnitude(x: np.ndarray, sample_rate: float = 1000.0) -> FreqSequence:
    """Per-channel one-sided magnitude spectrum of a (c, l) trial.

    Bins 0..l//2 (l//2 + 1 of them, 221 for l=440), transposed so the bin
    axis leads: downstream recurrences walk the spectrum bin by bin with one
    value per channel at each step.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"fft_magnitude: expected (channels, samples), got {x.shape}")
    c, l = x.shape
    if l < 2:
        raise ValueError("fft_magnitude: need at least 2 samples")
    spectrum = fft(x, axis=-1)[:, : l // 2 + 1]
    return FreqSequence(magnitude=np.abs(spectrum).T.copy(), bin_resolution=sample_rate / l)
