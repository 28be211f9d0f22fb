"""Noise predictors for the reverse chain.

The trainable one is a token-mixing MLP over the flattened latent with
sinusoidal timestep features and an additive projection of the condition
vector.  Two condition pathways share it: the aligned semantic embedding and
a learned per-class embedding table.  The oracle variant knows the clean
target and inverts the forward noising exactly; it anchors the algebra tests
and the memorization cascade.
"""

from __future__ import annotations

import numpy as np

from ..autodiff import Tensor, gelu, no_grad, take
from ..autodiff.nn import Linear, Module, normal_init
from ..autodiff.tensor import mul
from .schedule import NoiseSchedule

TIME_EMBED_DIM = 32


def timestep_embedding(t: np.ndarray, dim: int = TIME_EMBED_DIM, max_period: float = 10_000.0) -> np.ndarray:
    """Sinusoidal features of integer timesteps: (B,) -> (B, dim)."""
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    half = dim // 2
    freqs = np.exp(-np.log(max_period) * np.arange(half) / half)
    args = t[:, None] * freqs[None, :]
    return np.concatenate([np.sin(args), np.cos(args)], axis=1).astype(np.float32)


class DenoiserNet(Module):
    """eps_theta(x_t, t, cond): flattened latent -> same-shape noise estimate.

    The output layer starts at zero, so the untrained net predicts zero noise
    and the initial training loss sits at E[eps^2] = 1.
    """

    def __init__(
        self,
        latent_shape: tuple[int, int, int],
        cond_dim: int,
        n_classes: int,
        hidden: int,
        rng: np.random.Generator,
        dtype=np.float32,
    ):
        self.latent_shape = tuple(latent_shape)
        self.latent_size = int(np.prod(latent_shape))
        self.cond_dim = cond_dim
        self.n_classes = n_classes
        self.in_proj = Linear(self.latent_size, hidden, rng, dtype=dtype)
        self.time_proj = Linear(TIME_EMBED_DIM, hidden, rng, dtype=dtype)
        self.cond_proj = Linear(cond_dim, hidden, rng, dtype=dtype)
        self.mid = Linear(hidden, hidden, rng, dtype=dtype)
        self.out_proj = Linear(hidden, self.latent_size, rng, dtype=dtype)
        self.out_proj.weight.data = np.zeros_like(self.out_proj.weight.data)
        # Timestep-gated input skip: the true noise carries an x_t term whose
        # coefficient depends only on t, so giving the net that pathway
        # directly keeps late-chain predictions (and reverse sampling) stable.
        # Zero start preserves eps_hat = 0 at init.
        self.skip_gate = Linear(TIME_EMBED_DIM, self.latent_size, rng, dtype=dtype)
        self.skip_gate.weight.data = np.zeros_like(self.skip_gate.weight.data)
        self.class_table = Tensor(normal_init(rng, (n_classes, cond_dim), std=0.5, dtype=dtype), requires_grad=True)

    def class_condition(self, labels: np.ndarray) -> Tensor:
        labels = np.asarray(labels, dtype=np.int64)
        if np.any(labels < 0) or np.any(labels >= self.n_classes):
            raise ValueError(f"DenoiserNet: class labels outside [0, {self.n_classes})")
        return take(self.class_table, labels, axis=0)

    def __call__(self, x_t: Tensor, t: np.ndarray, cond: Tensor) -> Tensor:
        batch = x_t.shape[0]
        if x_t.shape != (batch,) + self.latent_shape:
            raise ValueError(f"DenoiserNet: latent shape {x_t.shape[1:]} does not match {self.latent_shape}")
        flat = x_t.reshape((batch, self.latent_size))
        t_feat = Tensor(timestep_embedding(t).astype(self.in_proj.weight.data.dtype))
        h = gelu(self.in_proj(flat) + self.time_proj(t_feat) + self.cond_proj(cond))
        h = gelu(self.mid(h))
        eps = self.out_proj(h) + mul(self.skip_gate(t_feat), flat)
        return eps.reshape((batch,) + self.latent_shape)

    def predict(self, x_t: np.ndarray, t: int, cond: np.ndarray) -> np.ndarray:
        """Inference-path forward: single latent, no tape."""
        dtype = self.in_proj.weight.data.dtype
        with no_grad():
            out = self(
                Tensor(np.asarray(x_t, dtype=dtype)[None]),
                np.array([t]),
                Tensor(np.asarray(cond, dtype=dtype)[None]),
            )
        return out.data[0].astype(np.float64)


class OracleDenoiser:
    """Knows the clean latent; returns the exact noise consistent with x_t.

    eps = (x_t - sqrt(alpha_bar_t) * x0) / sqrt(1 - alpha_bar_t).  Ignores the
    condition, which makes it a pure algebra probe for the reverse chain.
    """

    def __init__(self, x0: np.ndarray, schedule: NoiseSchedule):
        self.x0 = np.asarray(x0, dtype=np.float64)
        self.schedule = schedule

    def predict(self, x_t: np.ndarray, t: int, cond: np.ndarray | None = None) -> np.ndarray:
        ab = self.schedule.alpha_bars[t]
        return (np.asarray(x_t, dtype=np.float64) - np.sqrt(ab) * self.x0) / np.sqrt(1.0 - ab)
