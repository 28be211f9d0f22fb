"""Time-frequency fusion and the supervised classifier."""

from .model import TfeModel, fuse, pool_time
from .train import MissingPretrainedError, TfeTrainResult, classify, classify_batch, finetune_tfe

__all__ = [
    "MissingPretrainedError",
    "TfeModel",
    "TfeTrainResult",
    "classify",
    "classify_batch",
    "finetune_tfe",
    "fuse",
    "pool_time",
]
