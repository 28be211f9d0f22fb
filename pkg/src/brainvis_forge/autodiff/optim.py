"""Named parameter store with Adam state, and the Adam update itself."""

from __future__ import annotations

import numpy as np

from .nn import Module
from .tensor import ShapeError, Tensor


class ParamStore:
    """Named trainable tensors plus per-parameter first/second moments.

    Tensors are shared with the owning modules, so an update here is visible
    to every forward pass that uses them.
    """

    def __init__(self):
        self._params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def register(self, name: str, tensor: Tensor) -> Tensor:
        if name in self._params:
            raise ValueError(f"ParamStore: duplicate parameter name {name!r}")
        self._params[name] = tensor
        self._m[name] = np.zeros_like(tensor.data)
        self._v[name] = np.zeros_like(tensor.data)
        return tensor

    def register_module(self, prefix: str, module: Module) -> None:
        for name, tensor in module.named_parameters():
            self.register(f"{prefix}.{name}" if prefix else name, tensor)

    def names(self) -> list[str]:
        return list(self._params)

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for t in self._params.values():
            t.grad = None

    def collect_grads(self) -> dict[str, np.ndarray]:
        """Gradients currently attached to the stored tensors."""
        return {name: t.grad for name, t in self._params.items() if t.grad is not None}

    def state(self) -> dict[str, np.ndarray]:
        """Flat array map for persistence: values, moments, step counter."""
        out: dict[str, np.ndarray] = {}
        for name, t in self._params.items():
            out[f"param/{name}"] = t.data.copy()
            out[f"adam_m/{name}"] = self._m[name].copy()
            out[f"adam_v/{name}"] = self._v[name].copy()
        out["adam_step"] = np.asarray([self.step_count], dtype=np.float32)
        return out

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for name, t in self._params.items():
            for prefix, target in (("param", None), ("adam_m", self._m), ("adam_v", self._v)):
                key = f"{prefix}/{name}"
                if key not in state:
                    raise KeyError(f"ParamStore.load_state: missing {key}")
                arr = np.asarray(state[key], dtype=t.data.dtype)
                if arr.shape != t.shape:
                    raise ShapeError(f"ParamStore.load_state: {key} expects {t.shape}, got {arr.shape}")
                if target is None:
                    t.data = arr.copy()
                else:
                    target[name] = arr.copy()
        self.step_count = int(state["adam_step"][0])


def adam_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    trainable: list[str] | None = None,
) -> ParamStore:
    """One bias-corrected Adam update over `grads`; increments the step counter.

    `trainable`, when given, is the set of parameters that must receive a
    gradient this step; a missing one is an error rather than a silent skip.
    """
    unknown = set(grads) - set(store._params)
    if unknown:
        raise KeyError(f"adam_step: gradients for unknown parameters {sorted(unknown)}")
    if trainable is not None:
        missing = set(trainable) - set(grads)
        if missing:
            raise KeyError(f"adam_step: trainable parameters missing gradients: {sorted(missing)}")

    store.step_count += 1
    t = store.step_count
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name, g in grads.items():
        p = store._params[name]
        if g.shape != p.shape:
            raise ShapeError(f"adam_step: gradient for {name} has shape {g.shape}, expected {p.shape}")
        g = g.astype(p.data.dtype, copy=False)
        m = store._m[name] = beta1 * store._m[name] + (1.0 - beta1) * g
        v = store._v[name] = beta2 * store._v[name] + (1.0 - beta2) * (g * g)
        update = (m / bc1) / (np.sqrt(v / bc2) + eps)
        p.data = p.data - lr * update
    return store
