"""Alignment network: fused embedding -> semantic space via residual blocks."""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, gelu, no_grad
from ..autodiff.nn import Linear, Module


class ResidualBlock(Module):
    """linear -> gelu -> linear with a skip; zero second linear is identity."""

    def __init__(self, dim: int, rng: np.random.Generator, dtype=np.float32):
        self.fc1 = Linear(dim, dim, rng, dtype=dtype)
        self.fc2 = Linear(dim, dim, rng, dtype=dtype)

    def __call__(self, x: Tensor) -> Tensor:
        return x + self.fc2(gelu(self.fc1(x)))


class AlignmentNet(Module):
    def __init__(self, in_dim: int, e: int, rng: np.random.Generator, n_blocks: int = 2, dtype=np.float32):
        self.input_proj = Linear(in_dim, e, rng, dtype=dtype)
        self.blocks = [ResidualBlock(e, rng, dtype=dtype) for _ in range(n_blocks)]

    def __call__(self, x: Tensor) -> Tensor:
        h = self.input_proj(x)
        for block in self.blocks:
            h = block(h)
        return h


def align(net: AlignmentNet, tfe_embedding: np.ndarray) -> np.ndarray:
    """Deterministic forward map of fused embeddings to the semantic space."""
    arr = np.asarray(tfe_embedding, dtype=net.input_proj.weight.data.dtype)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[None, :]
    with no_grad():
        out = net(Tensor(arr)).data
    return out[0].copy() if squeeze else out.copy()
