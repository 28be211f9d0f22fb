"""Core dataset types: multichannel trials, headers, and splits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EegRecord:
    """One multichannel trial: x is (channels, samples) float32."""

    x: np.ndarray
    class_label: int
    subject_id: int
    image_id: int

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float32)
        if self.x.ndim != 2:
            raise ValueError(f"EegRecord: x must be 2-D (channels, samples), got {self.x.shape}")
        if not np.all(np.isfinite(self.x)):
            raise ValueError("EegRecord: trial contains NaN or Inf")


@dataclass
class DatasetHeader:
    n_records: int
    c: int
    l: int
    n_classes: int
    normalized: bool
    version: int = 1


@dataclass
class DatasetSplit:
    """Disjoint train/val/test record indices; every image lives in one split."""

    train: list[int]
    val: list[int]
    test: list[int]
    split_seed: int = 0

    def all_indices(self) -> list[int]:
        return sorted(self.train + self.val + self.test)


def zscore_channels(x: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    """Per-channel zero-mean unit-variance scaling of one trial."""
    mu = x.mean(axis=1, keepdims=True)
    sd = x.std(axis=1, keepdims=True)
    return ((x - mu) / np.maximum(sd, eps)).astype(x.dtype)


def normalize_records(records: list[EegRecord]) -> list[EegRecord]:
    return [
        EegRecord(zscore_channels(r.x), r.class_label, r.subject_id, r.image_id)
        for r in records
    ]
