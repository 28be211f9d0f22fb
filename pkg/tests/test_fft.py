"""Transform correctness against an independent direct-summation oracle."""

import numpy as np
import pytest

from brainvis_forge.freq.fft import fft, fft_magnitude


def naive_dft(x: np.ndarray) -> np.ndarray:
    """O(n^2) direct evaluation; deliberately shares no code with fft()."""
    n = len(x)
    k = np.arange(n)
    return np.array([np.sum(x * np.exp(-2j * np.pi * kk * k / n)) for kk in range(n)])


@pytest.mark.parametrize("n", [1, 2, 3, 7, 8, 12, 35, 81, 121, 440])
def test_fft_matches_naive_dft(n):
    rng = np.random.default_rng(n)
    x = rng.standard_normal(n)
    got = fft(x)
    want = naive_dft(x)
    scale = max(1.0, np.max(np.abs(want)))
    assert np.max(np.abs(got - want)) / scale < 1e-10


def test_fft_handles_non_power_of_two_length_440():
    # 440 = 2^3 * 5 * 11; a power-of-two-only implementation cannot do this.
    x = np.random.default_rng(0).standard_normal(440)
    assert fft(x).shape == (440,)


def test_parseval_identity_on_100_random_signals():
    rng = np.random.default_rng(7)
    for _ in range(100):
        x = rng.standard_normal(440)
        spectrum = fft(x)
        lhs = np.sum(x * x)
        rhs = np.sum(np.abs(spectrum) ** 2) / len(x)
        assert abs(lhs - rhs) / abs(lhs) < 1e-6


def test_linearity_in_complex_domain():
    rng = np.random.default_rng(9)
    for _ in range(20):
        x, y = rng.standard_normal(440), rng.standard_normal(440)
        a, b = rng.standard_normal(2)
        lhs = fft(a * x + b * y)
        rhs = a * fft(x) + b * fft(y)
        scale = max(1.0, np.max(np.abs(rhs)))
        assert np.max(np.abs(lhs - rhs)) / scale < 1e-6


def test_constant_signal_concentrates_at_dc():
    a, l = 0.73, 64
    seq = fft_magnitude(np.full((2, l), a), sample_rate=100.0)
    assert seq.magnitude.shape == (l // 2 + 1, 2)
    np.testing.assert_allclose(seq.magnitude[0], a * l, rtol=1e-12)
    assert np.all(seq.magnitude[1:] < 1e-6)


def test_integer_bin_sinusoid_magnitude_is_half_length():
    l, k = 64, 5
    t = np.arange(l)
    x = np.sin(2 * np.pi * k * t / l)[None, :]
    seq = fft_magnitude(x, sample_rate=float(l))
    np.testing.assert_allclose(seq.magnitude[k, 0], l / 2, rtol=1e-9)
    others = np.delete(seq.magnitude[:, 0], k)
    assert np.all(others < 1e-6)


def test_bin_resolution_and_count_for_reference_geometry():
    x = np.random.default_rng(1).standard_normal((128, 440))
    seq = fft_magnitude(x, sample_rate=1000.0)
    assert seq.n_bins == 221
    assert seq.bin_resolution == pytest.approx(1000.0 / 440)
    assert np.all(seq.magnitude >= 0)


def test_fft_magnitude_rejects_bad_shapes():
    with pytest.raises(ValueError):
        fft_magnitude(np.zeros(16))
    with pytest.raises(ValueError):
        fft_magnitude(np.zeros((4, 1)))
