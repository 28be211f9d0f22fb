"""Generation quality metrics: Inception-style score, Frechet distance, SSIM."""

from __future__ import annotations

import warnings

import numpy as np


def inception_score(probs: np.ndarray, splits: int = 1) -> tuple[float, float]:
    """exp(mean KL(p(y|x) || marginal)), natural log; returns (mean, std) over splits.

    Rows must already be probability vectors; anything off by more than 1e-5
    is rejected rather than renormalized.
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or len(probs) == 0:
        raise ValueError(f"inception_score: expected nonempty (n, classes), got {probs.shape}")
    sums = probs.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-5):
        raise ValueError("inception_score: rows must sum to 1 within 1e-5")
    if not 1 <= splits <= len(probs):
        raise ValueError(f"inception_score: splits={splits} invalid for {len(probs)} rows")

    def score(block: np.ndarray) -> float:
        marginal = block.mean(axis=0, keepdims=True)
        ratio = np.where(block > 0, block / marginal, 1.0)
        kl = np.sum(np.where(block > 0, block * np.log(ratio), 0.0), axis=1)
        return float(np.exp(np.mean(kl)))

    chunks = np.array_split(probs, splits)
    values = [score(chunk) for chunk in chunks]
    return float(np.mean(values)), float(np.std(values))


def _sym_sqrt(mat: np.ndarray, clamp: float = -1e-8) -> np.ndarray:
    """Square root of a symmetric PSD matrix via eigendecomposition.

    Eigenvalues in (clamp, 0) are rounding debris and clamp to zero; anything
    more negative means the input was not PSD and is a real error.
    """
    sym = (mat + mat.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    floor = clamp * max(1.0, float(np.max(np.abs(vals), initial=0.0)))
    if np.any(vals < floor):
        raise ValueError(f"matrix square root: eigenvalue {vals.min():.3e} below tolerance")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def fid_from_moments(mu_a: np.ndarray, sigma_a: np.ndarray, mu_b: np.ndarray, sigma_b: np.ndarray) -> float:
    """||mu_a - mu_b||^2 + Tr(Sa + Sb - 2 (Sa Sb)^{1/2}).

    The cross term uses Tr((Sa^{1/2} Sb Sa^{1/2})^{1/2}), the symmetrized
    form of the product root, so only symmetric eigendecompositions appear.
    """
    mu_a, mu_b = np.asarray(mu_a, dtype=np.float64), np.asarray(mu_b, dtype=np.float64)
    sigma_a, sigma_b = np.asarray(sigma_a, dtype=np.float64), np.asarray(sigma_b, dtype=np.float64)
    if mu_a.shape != mu_b.shape or sigma_a.shape != sigma_b.shape:
        raise ValueError("fid_from_moments: moment shapes differ")
    root_a = _sym_sqrt(sigma_a)
    inner = root_a @ sigma_b @ root_a
    cross = _sym_sqrt(inner)
    diff = mu_a - mu_b
    return float(diff @ diff + np.trace(sigma_a) + np.trace(sigma_b) - 2.0 * np.trace(cross))


def fid(features_a: np.ndarray, features_b: np.ndarray) -> float:
    """Frechet distance between Gaussian fits of two feature sets."""
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ValueError(f"fid: feature dims differ, {a.shape} vs {b.shape}")
    dim = a.shape[1]
    if len(a) <= dim or len(b) <= dim:
        warnings.warn(
            f"fid: sample counts ({len(a)}, {len(b)}) do not exceed feature dim {dim}; "
            "covariances are rank-deficient",
            stacklevel=2,
        )
    mu_a, mu_b = a.mean(axis=0), b.mean(axis=0)
    sigma_a = np.cov(a, rowvar=False)
    sigma_b = np.cov(b, rowvar=False)
    return fid_from_moments(mu_a, np.atleast_2d(sigma_a), mu_b, np.atleast_2d(sigma_b))


def ssim(
    img_a: np.ndarray,
    img_b: np.ndarray,
    dynamic_range: float = 2.0,
    window: int = 8,
    stride: int = 4,
) -> float:
    """Windowed structural similarity, plain box windows, mean over windows and channels.

    Inputs are (C, H, W) with values spanning `dynamic_range` (2 for [-1, 1]).
    C1 = (0.01 L)^2, C2 = (0.03 L)^2; window variance is the population form.
    """
    a = np.asarray(img_a, dtype=np.float64)
    b = np.asarray(img_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"ssim: shapes differ, {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a, b = a[None], b[None]
    channels, height, width = a.shape
    if height < window or width < window:
        raise ValueError(f"ssim: image {height}x{width} smaller than window {window}")
    c1 = (0.01 * dynamic_range) ** 2
    c2 = (0.03 * dynamic_range) ** 2

    values = []
    for ch in range(channels):
        for y in range(0, height - window + 1, stride):
            for x in range(0, width - window + 1, stride):
                wa = a[ch, y : y + window, x : x + window]
                wb = b[ch, y : y + window, x : x + window]
                mu_a, mu_b = wa.mean(), wb.mean()
                var_a, var_b = wa.var(), wb.var()
                cov = ((wa - mu_a) * (wb - mu_b)).mean()
                values.append(
                    ((2 * mu_a * mu_b + c1) * (2 * cov + c2))
                    / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
                )
    return float(np.mean(values))
