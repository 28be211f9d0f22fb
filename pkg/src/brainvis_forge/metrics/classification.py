"""Classification metrics: top-K accuracy, macro F1, and N-way top-K hit rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def top_k_accuracy(logits: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Fraction of rows whose true label ranks in the k largest logits.

    Ties rank the lower class index first, so results are deterministic.
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = logits.shape[1]
    if not 1 <= k <= n_classes:
        raise ValueError(f"top_k_accuracy: k={k} outside [1, {n_classes}]")
    hits = 0
    for row, label in zip(logits, labels):
        target = row[label]
        stronger = np.sum(row > target) + np.sum((row == target) & (np.arange(n_classes) < label))
        hits += int(stronger < k)
    return hits / max(len(labels), 1)


def f1_macro(predictions: np.ndarray, labels: np.ndarray, n_classes: int) -> float:
    """Unweighted mean over classes of 2PR/(P+R); empty denominators count as 0."""
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if np.any(labels < 0) or np.any(labels >= n_classes):
        raise ValueError("f1_macro: label outside [0, n_classes)")
    scores = []
    for c in range(n_classes):
        tp = int(np.sum((predictions == c) & (labels == c)))
        fp = int(np.sum((predictions == c) & (labels != c)))
        fn = int(np.sum((predictions != c) & (labels == c)))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        scores.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return float(np.mean(scores))


@dataclass
class GaConfig:
    """N-way top-K protocol: N-1 random wrong classes join the true one per trial."""

    n_way: int = 50
    top_k: int = 1
    n_trials: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.n_way < 2:
            raise ValueError(f"GaConfig: n_way must be >= 2, got {self.n_way}")
        if not 1 <= self.top_k < self.n_way:
            raise ValueError(f"GaConfig: top_k must be in [1, n_way), got {self.top_k}")
        if self.n_trials < 1:
            raise ValueError("GaConfig: n_trials must be >= 1")


def n_way_top_k(probs: np.ndarray, labels: np.ndarray, cfg: GaConfig) -> float:
    """Monte-Carlo hit rate of the true class among N sampled classes.

    Per trial: draw N-1 distinct wrong classes, restrict the row's scores to
    those plus the true class, and count a hit when the true class sits in
    the top K of the restriction (ties to the lower class index, matching
    top_k_accuracy).  Averaged over trials and samples; seeded.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = probs.shape[1]
    if cfg.n_way > n_classes:
        raise ValueError(f"n_way_top_k: N={cfg.n_way} exceeds {n_classes} available classes")
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x6A]))
    hits = 0
    total = 0
    for row, label in zip(probs, labels):
        wrong = np.delete(np.arange(n_classes), label)
        for _ in range(cfg.n_trials):
            chosen = rng.choice(wrong, size=cfg.n_way - 1, replace=False)
            candidates = np.concatenate([[label], chosen])
            candidates.sort()
            scores = row[candidates]
            target = row[label]
            pos = int(np.searchsorted(candidates, label))
            stronger = np.sum(scores > target) + np.sum((scores == target) & (np.arange(len(candidates)) < pos))
            hits += int(stronger < cfg.top_k)
            total += 1
    return hits / max(total, 1)
