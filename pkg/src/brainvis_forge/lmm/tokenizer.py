"""Frozen random-projection tokenizer.

Each raw unit is z-scored and pushed through a fixed Gaussian linear map to
n_t logits; the argmax is its codeword.  The map is never trained, which
sidesteps codebook-collapse machinery while still giving stable discrete
targets (the random-projection quantizer idea from self-supervised speech).
"""

from __future__ import annotations

import numpy as np


class Codebook:
    """Immutable tokenizer: flattened unit (c * l/n values) -> index in [0, n_t)."""

    def __init__(self, unit_dim: int, n_entries: int, rng: np.random.Generator):
        if unit_dim < 1 or n_entries < 2:
            raise ValueError(f"Codebook: bad dims unit_dim={unit_dim}, n_entries={n_entries}")
        self.unit_dim = unit_dim
        self.n_entries = n_entries
        weight = rng.standard_normal((unit_dim, n_entries)) / np.sqrt(unit_dim)
        weight.setflags(write=False)
        self.weight = weight

    def assign(self, flat_units: np.ndarray) -> np.ndarray:
        """Codeword indices for (m, unit_dim) rows; ties resolve to the lowest index."""
        flat_units = np.asarray(flat_units, dtype=np.float64)
        if flat_units.ndim != 2 or flat_units.shape[1] != self.unit_dim:
            raise ValueError(f"Codebook.assign: expected (m, {self.unit_dim}), got {flat_units.shape}")
        mu = flat_units.mean(axis=1, keepdims=True)
        sd = flat_units.std(axis=1, keepdims=True)
        z = (flat_units - mu) / np.maximum(sd, 1e-8)
        logits = z @ self.weight
        return np.argmax(logits, axis=1)

    def one_hot(self, indices: np.ndarray, dtype=np.float32) -> np.ndarray:
        out = np.zeros((len(indices), self.n_entries), dtype=dtype)
        out[np.arange(len(indices)), indices] = 1.0
        return out

    def state(self) -> dict[str, np.ndarray]:
        return {"codebook_weight": np.array(self.weight)}

    @classmethod
    def from_state(cls, state: dict[str, np.ndarray]) -> "Codebook":
        weight = np.asarray(state["codebook_weight"], dtype=np.float64)
        cb = cls.__new__(cls)
        cb.unit_dim, cb.n_entries = weight.shape
        weight = weight.copy()
        weight.setflags(write=False)
        cb.weight = weight
        return cb


def tokenize(codebook: Codebook, flat_units: np.ndarray) -> np.ndarray:
    """One-hot codewords for raw masked units: (m, unit_dim) -> (m, n_t)."""
    return codebook.one_hot(codebook.assign(flat_units))
