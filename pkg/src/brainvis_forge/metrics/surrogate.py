"""Surrogate image classifier for generation scoring.

A pretrained large-vocabulary classifier is out of reach offline, so a small
MLP trained on the clean target images plays its role: class probabilities
feed the hit-rate and diversity scores, penultimate activations feed the
Frechet distance.  Scores are meaningful relative to this surrogate, which is
all the property-based acceptance suite asserts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..autodiff import ParamStore, Tensor, adam_step, backward, gelu, no_grad
from ..autodiff.nn import Linear, Module
from ..autodiff.ops import cross_entropy
from ..freq.train import one_hot_labels


class SurrogateClassifier(Module):
    def __init__(self, input_size: int, hidden: int, n_classes: int, rng: np.random.Generator):
        self.fc1 = Linear(input_size, hidden, rng)
        self.fc2 = Linear(hidden, n_classes, rng)

    def features(self, flat_images: Tensor) -> Tensor:
        return gelu(self.fc1(flat_images))

    def __call__(self, flat_images: Tensor) -> Tensor:
        return self.fc2(self.features(flat_images))


@dataclass
class SurrogateResult:
    model: SurrogateClassifier
    train_accuracy: float


def train_surrogate(
    images: np.ndarray,
    labels: np.ndarray,
    n_classes: int,
    *,
    hidden: int = 64,
    epochs: int = 200,
    lr: float = 3e-3,
    seed: int = 0,
) -> SurrogateResult:
    """Overfit the clean image set; it is a measuring stick, not a model under test."""
    flat = np.asarray(images, dtype=np.float32).reshape(len(images), -1)
    labels = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5A9]))
    model = SurrogateClassifier(flat.shape[1], hidden, n_classes, rng)
    store = ParamStore()
    store.register_module("surrogate", model)
    onehot = one_hot_labels(labels, n_classes)
    for _ in range(epochs):
        store.zero_grad()
        loss = cross_entropy(model(Tensor(flat)), onehot)
        backward(loss)
        adam_step(store, store.collect_grads(), lr)
    with no_grad():
        preds = np.argmax(model(Tensor(flat)).data, axis=1)
    return SurrogateResult(model=model, train_accuracy=float(np.mean(preds == labels)))


def surrogate_outputs(model: SurrogateClassifier, images: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(probabilities, penultimate features) for a stack of (C, H, W) images."""
    flat = np.asarray(images, dtype=np.float32).reshape(len(images), -1)
    with no_grad():
        feats = model.features(Tensor(flat)).data
        logits = model.fc2(Tensor(feats)).data
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs.astype(np.float64), feats.astype(np.float64)
