"""Latent masked modeling of the time branch."""

from .loss import lmm_loss
from .masking import MaskPlan, make_mask_plan
from .model import MaskedPredictor, Teacher, UnitProjector, VisibleEncoder, teacher_update
from .tokenizer import Codebook, tokenize
from .train import LmmModels, LmmTrainResult, build_lmm_models, lmm_step, prepare_units, train_lmm

__all__ = [
    "Codebook",
    "LmmModels",
    "LmmTrainResult",
    "MaskPlan",
    "MaskedPredictor",
    "Teacher",
    "UnitProjector",
    "VisibleEncoder",
    "build_lmm_models",
    "lmm_loss",
    "lmm_step",
    "make_mask_plan",
    "prepare_units",
    "teacher_update",
    "tokenize",
    "train_lmm",
]
