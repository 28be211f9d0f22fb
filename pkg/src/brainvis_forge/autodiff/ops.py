"""Composite differentiable operations built from the tensor primitives.

Everything here works on arbitrary leading batch dimensions; the last one or
two axes carry the operation's structure.
"""

from __future__ import annotations

import math

import numpy as np

from .tensor import (
    ShapeError,
    Tensor,
    add,
    as_tensor,
    concat,
    log,
    log_softmax,
    matmul,
    mul,
    narrow,
    power,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    sub,
    swapaxes,
    take,
    tanh,
    tmean,
    tsum,
)


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    """x @ weight (+ bias).  x: (..., n, d_in), weight: (d_in, d_out)."""
    out = matmul(x, weight)
    if bias is not None:
        out = add(out, bias)
    return out


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale and shift."""
    if gain.shape != x.shape[-1:] or bias.shape != x.shape[-1:]:
        raise ShapeError(
            f"layer_norm: gain/bias {gain.shape}/{bias.shape} must match last axis of {x.shape}"
        )
    mu = tmean(x, axis=-1, keepdims=True)
    centered = sub(x, mu)
    var = tmean(mul(centered, centered), axis=-1, keepdims=True)
    inv = power(add(var, eps), -0.5)
    return add(mul(mul(centered, inv), gain), bias)


def mean_pool(x: Tensor, axis: int) -> Tensor:
    """Mean over one axis (e.g. pooling unit features to a single vector)."""
    return tmean(x, axis=axis)


def _split_heads(x: Tensor, n_heads: int) -> Tensor:
    *lead, n, d = x.shape
    if d % n_heads != 0:
        raise ShapeError(f"attention: model dim {d} not divisible by {n_heads} heads")
    x = reshape(x, tuple(lead) + (n, n_heads, d // n_heads))
    return swapaxes(x, -3, -2)  # (..., heads, n, d_head)


def _merge_heads(x: Tensor) -> Tensor:
    *lead, h, n, dh = x.shape
    x = swapaxes(x, -3, -2)
    return reshape(x, tuple(lead) + (n, h * dh))


def multi_head_attention(
    query: Tensor,
    context: Tensor,
    w_q: Tensor,
    b_q: Tensor,
    w_k: Tensor,
    b_k: Tensor,
    w_v: Tensor,
    b_v: Tensor,
    w_o: Tensor,
    b_o: Tensor,
    n_heads: int,
) -> Tensor:
    """Scaled dot-product attention, self- or cross- depending on `context`.

    query: (..., n_q, d); context: (..., n_k, d).  Scale is 1/sqrt(d_head).
    Sequences are fixed-length throughout the pipeline, so no padding mask.
    """
    q = _split_heads(linear(query, w_q, b_q), n_heads)
    k = _split_heads(linear(context, w_k, b_k), n_heads)
    v = _split_heads(linear(context, w_v, b_v), n_heads)
    scale = 1.0 / math.sqrt(q.shape[-1])
    scores = mul(matmul(q, swapaxes(k, -1, -2)), scale)
    attn = softmax(scores, axis=-1)
    mixed = _merge_heads(matmul(attn, v))
    return linear(mixed, w_o, b_o)


def lstm_cell(
    x: Tensor,
    h: Tensor,
    c: Tensor,
    w_x: Tensor,
    w_h: Tensor,
    bias: Tensor,
) -> tuple[Tensor, Tensor]:
    """One gated-recurrence step; gate blocks ordered input, forget, cell, output.

    x: (..., d_in); h, c: (..., d_h); w_x: (d_in, 4*d_h); w_h: (d_h, 4*d_h).
    Returns (h_next, c_next).
    """
    d_h = h.shape[-1]
    if w_x.shape[-1] != 4 * d_h or w_h.shape[-1] != 4 * d_h:
        raise ShapeError(
            f"lstm_cell: gate weights {w_x.shape}/{w_h.shape} inconsistent with hidden size {d_h}"
        )
    z = add(add(matmul(x, w_x), matmul(h, w_h)), bias)
    i = sigmoid(narrow(z, -1, 0, d_h))
    f = sigmoid(narrow(z, -1, d_h, d_h))
    g = tanh(narrow(z, -1, 2 * d_h, d_h))
    o = sigmoid(narrow(z, -1, 3 * d_h, d_h))
    c_next = add(mul(f, c), mul(i, g))
    h_next = mul(o, tanh(c_next))
    return h_next, c_next


def mse_loss(pred: Tensor, target: Tensor) -> Tensor:
    """Mean squared error over all elements."""
    pred = as_tensor(pred)
    target = as_tensor(target, pred)
    if pred.shape != target.shape:
        raise ShapeError(f"mse_loss: shapes {pred.shape} and {target.shape} differ")
    diff = sub(pred, target)
    return tmean(mul(diff, diff))


def cross_entropy(logits: Tensor, one_hot: Tensor | np.ndarray) -> Tensor:
    """Cross-entropy from raw logits against one-hot targets, mean over rows."""
    logits = as_tensor(logits)
    one_hot = as_tensor(one_hot, logits)
    if logits.shape != one_hot.shape:
        raise ShapeError(f"cross_entropy: shapes {logits.shape} and {one_hot.shape} differ")
    ls = log_softmax(logits, axis=-1)
    per_row = tsum(mul(one_hot, ls), axis=-1)
    return mul(tmean(per_row), -1.0)


def cosine_similarity(a: Tensor, b: Tensor) -> Tensor:
    """Cosine of the angle between two vectors (last-axis contraction).

    Zero-norm operands raise rather than being silently clamped.
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError(f"cosine_similarity: shapes {a.shape} and {b.shape} differ")
    flat_a = a.data.reshape(-1, a.shape[-1])
    flat_b = b.data.reshape(-1, b.shape[-1])
    if np.any(np.linalg.norm(flat_a, axis=-1) == 0.0) or np.any(np.linalg.norm(flat_b, axis=-1) == 0.0):
        raise ValueError("cosine_similarity: zero-norm vector")
    dot = tsum(mul(a, b), axis=-1)
    norm_a = sqrt(tsum(mul(a, a), axis=-1))
    norm_b = sqrt(tsum(mul(b, b), axis=-1))
    return mul(dot, power(mul(norm_a, norm_b), -1.0))
