"""Cross-modal alignment of fused embeddings to semantic fixture targets."""

from .fixtures import (
    FixtureMap,
    MissingTargetError,
    SemanticTargets,
    ZeroNormTargetError,
    generate_fixtures,
    load_fixtures,
    lookup,
    write_fixtures,
)
from .loss import si_loss
from .model import AlignmentNet, ResidualBlock, align
from .train import AlignTrainResult, train_align

__all__ = [
    "AlignTrainResult",
    "AlignmentNet",
    "FixtureMap",
    "MissingTargetError",
    "ResidualBlock",
    "SemanticTargets",
    "ZeroNormTargetError",
    "align",
    "generate_fixtures",
    "load_fixtures",
    "lookup",
    "si_loss",
    "train_align",
    "write_fixtures",
]
