"""Two-stage conditional sampling.

Stage 1 denoises from pure noise under the aligned semantic embedding and
stops early at T_s = floor(rho * T); stage 2 resumes from that latent,
unmodified, under the (predicted) class condition and runs to zero.  The
handoff is a pure continuation: no re-noising between stages.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .ddpm import reverse_step
from .denoiser import DenoiserNet
from .schedule import NoiseSchedule


@dataclass
class CascadeConfig:
    """rho is the fraction of the chain left to the refinement stage."""

    rho: float = 0.3
    condition_source: str = "learned"  # or "fixture": class vector from fixtures

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"CascadeConfig: rho must be in (0, 1), got {self.rho}")
        if self.condition_source not in ("learned", "fixture"):
            raise ValueError(f"CascadeConfig: unknown condition source {self.condition_source!r}")

    def switch_step(self, T: int) -> int:
        t_s = int(np.floor(self.rho * T))
        if not 0 < t_s < T:
            raise ValueError(f"CascadeConfig: switch step {t_s} degenerate for T={T}")
        return t_s


def sample_stage1(
    schedule: NoiseSchedule,
    denoiser,
    c_eeg: np.ndarray,
    rng: np.random.Generator,
    cascade: CascadeConfig,
    latent_shape: tuple[int, int, int],
    x_T: np.ndarray | None = None,
) -> np.ndarray:
    """Reverse steps T .. T_s+1 under the semantic condition; returns x_{T_s}."""
    t_s = cascade.switch_step(schedule.T)
    x = rng.standard_normal(latent_shape) if x_T is None else np.asarray(x_T, dtype=np.float64)
    for t in range(schedule.T, t_s, -1):
        x = reverse_step(schedule, denoiser, x, t, c_eeg, rng)
    return x


def refine_stage2(
    schedule: NoiseSchedule,
    denoiser,
    x_ts: np.ndarray,
    class_cond: np.ndarray,
    rng: np.random.Generator,
    cascade: CascadeConfig,
) -> np.ndarray:
    """Reverse steps T_s .. 1 under the class condition, continuing x_{T_s} as-is."""
    t_s = cascade.switch_step(schedule.T)
    x = np.asarray(x_ts, dtype=np.float64)
    for t in range(t_s, 0, -1):
        x = reverse_step(schedule, denoiser, x, t, class_cond, rng)
    return x


@dataclass
class GenerationProvenance:
    """Audit trail for one sample: which conditions drove which stage."""

    record_index: int
    sample_index: int
    predicted_label: int
    c_eeg_crc32: str
    stage1_steps: int
    stage2_steps: int
    mode: str = "cascade"

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _crc(vec: np.ndarray) -> str:
    return f"{zlib.crc32(np.ascontiguousarray(vec, dtype='<f8').tobytes()) & 0xFFFFFFFF:08x}"


def generate_samples(
    schedule: NoiseSchedule,
    denoiser: DenoiserNet,
    *,
    record_index: int,
    c_eeg: np.ndarray,
    predicted_label: int,
    class_cond: np.ndarray,
    cascade: CascadeConfig,
    n_samples: int = 4,
    master_seed: int = 0,
    mode: str = "cascade",
) -> list[tuple[np.ndarray, GenerationProvenance]]:
    """Draw `n_samples` latents for one record under the requested mode.

    Modes: "cascade" (semantic stage then class refinement), "no-refine"
    (semantic condition for the whole chain), "no-semantic" (class condition
    for the whole chain).  Each sample owns a seed stream derived from
    (master_seed, record_index, sample_index), so trajectories are
    reproducible and independent.
    """
    t_s = cascade.switch_step(schedule.T)
    out = []
    for s in range(n_samples):
        rng = np.random.default_rng(np.random.SeedSequence([master_seed, record_index, s]))
        if mode == "cascade":
            x = sample_stage1(schedule, denoiser, c_eeg, rng, cascade, denoiser.latent_shape)
            x = refine_stage2(schedule, denoiser, x, class_cond, rng, cascade)
            steps = (schedule.T - t_s, t_s)
        elif mode == "no-refine":
            x = rng.standard_normal(denoiser.latent_shape)
            for t in range(schedule.T, 0, -1):
                x = reverse_step(schedule, denoiser, x, t, c_eeg, rng)
            steps = (schedule.T, 0)
        elif mode == "no-semantic":
            x = rng.standard_normal(denoiser.latent_shape)
            for t in range(schedule.T, 0, -1):
                x = reverse_step(schedule, denoiser, x, t, class_cond, rng)
            steps = (0, schedule.T)
        else:
            raise ValueError(f"generate_samples: unknown mode {mode!r}")
        prov = GenerationProvenance(
            record_index=record_index,
            sample_index=s,
            predicted_label=int(predicted_label),
            c_eeg_crc32=_crc(c_eeg),
            stage1_steps=steps[0],
            stage2_steps=steps[1],
            mode=mode,
        )
        out.append((x, prov))
    return out
