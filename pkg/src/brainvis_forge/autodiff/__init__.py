"""Reverse-mode autodiff engine: tensors, tape, layers, Adam, gradient checks."""

from . import gradcheck, nn, ops
from .optim import ParamStore, adam_step
from .tensor import (
    ComputationTape,
    NonFiniteError,
    ShapeError,
    Tensor,
    active_tape,
    as_tensor,
    backward,
    broadcast_to,
    concat,
    exp,
    gelu,
    log,
    log_softmax,
    matmul,
    narrow,
    no_grad,
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

__all__ = [
    "ComputationTape",
    "NonFiniteError",
    "ParamStore",
    "ShapeError",
    "Tensor",
    "active_tape",
    "adam_step",
    "as_tensor",
    "backward",
    "broadcast_to",
    "concat",
    "exp",
    "gelu",
    "gradcheck",
    "log",
    "log_softmax",
    "matmul",
    "narrow",
    "nn",
    "no_grad",
    "ops",
    "power",
    "relu",
    "reshape",
    "sigmoid",
    "softmax",
    "sqrt",
    "swapaxes",
    "take",
    "tanh",
    "tmean",
    "tsum",
]
