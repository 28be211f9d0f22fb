"""Frequency branch: mixed-radix FFT features and a recurrent classifier."""

from .fft import FreqSequence, fft, fft_magnitude
from .train import FreqClassifier, FreqTrainResult, freq_classify_train, spectra_matrix

__all__ = [
    "FreqClassifier",
    "FreqSequence",
    "FreqTrainResult",
    "fft",
    "fft_magnitude",
    "freq_classify_train",
    "spectra_matrix",
]
