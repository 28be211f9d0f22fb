"""Finite-difference verification of analytic gradients.

Central differences (f(x+h) - f(x-h)) / 2h with h = 1e-5, always in 64-bit;
single precision makes the subtraction too noisy to trust.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from . import ops
from .tensor import (
    Tensor,
    backward,
    concat,
    exp,
    gelu,
    log,
    log_softmax,
    matmul,
    mul,
    narrow,
    power,
    relu,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    swapaxes,
    take,
    tanh,
    tmean,
    tsum,
)

DEFAULT_H = 1e-5
DEFAULT_TOL = 1e-4

LossFn = Callable[[Sequence[Tensor]], Tensor]


def analytic_grads(fn: LossFn, arrays: Sequence[np.ndarray]) -> list[np.ndarray]:
    inputs = [Tensor(np.asarray(a, dtype=np.float64), requires_grad=True) for a in arrays]
    loss = fn(inputs)
    backward(loss)
    return [np.zeros_like(t.data) if t.grad is None else t.grad for t in inputs]


def finite_difference_grads(fn: LossFn, arrays: Sequence[np.ndarray], h: float = DEFAULT_H) -> list[np.ndarray]:
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]

    def value_at(mutated: list[np.ndarray]) -> float:
        inputs = [Tensor(a) for a in mutated]
        return fn(inputs).item()

    grads = []
    for i, base in enumerate(arrays):
        g = np.zeros_like(base)
        flat = base.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + h
            f_plus = value_at(arrays)
            flat[j] = orig - h
            f_minus = value_at(arrays)
            flat[j] = orig
            gflat[j] = (f_plus - f_minus) / (2.0 * h)
        grads.append(g)
    return grads


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    # Scale floor 1e-4: a gradient that is exactly zero (e.g. a bias whose
    # shift cancels inside softmax) must be compared absolutely, against
    # central-difference noise of order 1e-9, not divided by it.
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), 1e-4)
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


def check_gradients(fn: LossFn, arrays: Sequence[np.ndarray], h: float = DEFAULT_H) -> float:
    """Max relative error between tape gradients and central differences."""
    ana = analytic_grads(fn, arrays)
    num = finite_difference_grads(fn, arrays, h=h)
    return max(relative_error(a, n) for a, n in zip(ana, num))


def _weighted_sum(t: Tensor, w: Tensor) -> Tensor:
    """Reduce to a scalar through fixed random weights so every output element matters."""
    return tsum(mul(t, w))


def _one_hot(rng: np.random.Generator, rows: int, classes: int) -> np.ndarray:
    out = np.zeros((rows, classes))
    out[np.arange(rows), rng.integers(0, classes, size=rows)] = 1.0
    return out


def op_catalog(rng: np.random.Generator) -> dict[str, tuple[LossFn, list[np.ndarray]]]:
    """One probe per differentiable operation; fresh random inputs per call.

    Kinked ops (relu, gelu) get inputs bounded away from the kink so the
    finite-difference stencil stays on one side.
    """
    r = rng.standard_normal

    def away_from_zero(shape, margin=0.05):
        x = r(shape)
        return x + np.sign(x) * margin

    n_heads = 2
    d = 8
    attn_weights = [r((d, d)) * 0.5 for _ in range(4)]
    attn_biases = [r(d) * 0.1 for _ in range(4)]
    attn_inputs_self = [r((3, 5, d))] + [w for pair in zip(attn_weights, attn_biases) for w in pair]
    attn_inputs_cross = [r((2, 4, d)), r((2, 6, d))] + [
        w for pair in zip([r((d, d)) * 0.5 for _ in range(4)], [r(d) * 0.1 for _ in range(4)]) for w in pair
    ]
    w_sum = Tensor(r((3, 5, d)))
    w_sum_cross = Tensor(r((2, 4, d)))

    def self_attn_loss(ts):
        x = ts[0]
        out = ops.multi_head_attention(x, x, *ts[1:], n_heads=n_heads)
        return tsum(mul(out, w_sum))

    def cross_attn_loss(ts):
        out = ops.multi_head_attention(ts[0], ts[1], *ts[2:], n_heads=n_heads)
        return tsum(mul(out, w_sum_cross))

    lstm_inputs = [r((3, 4)), r((3, 6)), r((3, 6)), r((4, 24)) * 0.5, r((6, 24)) * 0.5, r(24) * 0.1]
    w_h_out = Tensor(r((3, 6)))
    w_c_out = Tensor(r((3, 6)))

    def lstm_loss(ts):
        h, c = ops.lstm_cell(*ts)
        return tsum(mul(h, w_h_out)) + tsum(mul(c, w_c_out))

    ln_inputs = [r((4, 7)), r(7) * 0.5 + 1.0, r(7) * 0.2]
    ce_logits = [r((5, 9))]
    ce_target = _one_hot(rng, 5, 9)
    take_idx = np.array([0, 2, 2, 4])

    def probe(build, inputs, out_shape):
        w = Tensor(r(out_shape))
        return (lambda ts: _weighted_sum(build(ts), w)), inputs

    catalog: dict[str, tuple[LossFn, list[np.ndarray]]] = {
        "add": probe(lambda ts: ts[0] + ts[1], [r((4, 5)), r((4, 5))], (4, 5)),
        "add_bias_broadcast": probe(lambda ts: ts[0] + ts[1], [r((4, 5)), r(5)], (4, 5)),
        "sub": probe(lambda ts: ts[0] - ts[1], [r((4, 5)), r((4, 5))], (4, 5)),
        "mul": probe(lambda ts: mul(ts[0], ts[1]), [r((4, 5)), r((4, 5))], (4, 5)),
        "div": probe(lambda ts: ts[0] / ts[1], [r((4, 5)), away_from_zero((4, 5), 0.5)], (4, 5)),
        "neg": probe(lambda ts: -ts[0], [r((4, 5))], (4, 5)),
        "power": probe(lambda ts: power(ts[0], 3.0), [r((4, 5))], (4, 5)),
        "matmul": probe(lambda ts: matmul(ts[0], ts[1]), [r((4, 6)), r((6, 5))], (4, 5)),
        "matmul_batched": probe(lambda ts: matmul(ts[0], ts[1]), [r((3, 4, 6)), r((6, 5))], (3, 4, 5)),
        "reshape": probe(lambda ts: reshape(ts[0], (2, 10)), [r((4, 5))], (2, 10)),
        "swapaxes": probe(lambda ts: swapaxes(ts[0], 0, 1), [r((4, 5))], (5, 4)),
        "take": probe(lambda ts: take(ts[0], take_idx, axis=0), [r((5, 3))], (4, 3)),
        "narrow": probe(lambda ts: narrow(ts[0], 1, 1, 3), [r((4, 6))], (4, 3)),
        "concat": probe(lambda ts: concat([ts[0], ts[1]], axis=1), [r((4, 3)), r((4, 2))], (4, 5)),
        "sum": probe(lambda ts: tsum(ts[0], axis=0), [r((4, 5))], (5,)),
        "mean_pool": probe(lambda ts: ops.mean_pool(ts[0], axis=0), [r((6, 5))], (5,)),
        "exp": probe(lambda ts: exp(ts[0]), [r((4, 5)) * 0.5], (4, 5)),
        "log": probe(lambda ts: log(ts[0]), [np.abs(r((4, 5))) + 0.5], (4, 5)),
        "sqrt": probe(lambda ts: sqrt(ts[0]), [np.abs(r((4, 5))) + 0.5], (4, 5)),
        "tanh": probe(lambda ts: tanh(ts[0]), [r((4, 5))], (4, 5)),
        "sigmoid": probe(lambda ts: sigmoid(ts[0]), [r((4, 5))], (4, 5)),
        "relu": probe(lambda ts: relu(ts[0]), [away_from_zero((4, 5))], (4, 5)),
        "gelu": probe(lambda ts: gelu(ts[0]), [r((4, 5))], (4, 5)),
        "softmax": probe(lambda ts: softmax(ts[0], axis=-1), [r((4, 7))], (4, 7)),
        "log_softmax": probe(lambda ts: log_softmax(ts[0], axis=-1), [r((4, 7))], (4, 7)),
        "layer_norm": probe(lambda ts: ops.layer_norm(ts[0], ts[1], ts[2]), ln_inputs, (4, 7)),
        "self_attention": (self_attn_loss, attn_inputs_self),
        "cross_attention": (cross_attn_loss, attn_inputs_cross),
        "lstm_cell": (lstm_loss, lstm_inputs),
        "mse_loss": (lambda ts: ops.mse_loss(ts[0], ts[1]), [r((4, 5)), r((4, 5))]),
        "cross_entropy": (lambda ts: ops.cross_entropy(ts[0], Tensor(ce_target)), ce_logits),
        "cosine_similarity": (lambda ts: ops.cosine_similarity(ts[0], ts[1]), [r(9) + 0.1, r(9) + 0.1]),
    }
    return catalog


def run_catalog_suite(probes: int = 10, seed: int = 2024, tol: float = DEFAULT_TOL) -> dict[str, float]:
    """Check every catalog op against finite differences on `probes` random draws.

    Returns the worst relative error per op; raises nothing, callers decide.
    """
    worst: dict[str, float] = {}
    for p in range(probes):
        rng = np.random.default_rng(seed + p)
        for name, (fn, arrays) in op_catalog(rng).items():
            err = check_gradients(fn, arrays)
            worst[name] = max(worst.get(name, 0.0), err)
    return worst
