"""Deterministic synthetic EEG with spectrally separable classes.

Each class owns a distinct set of sinusoid frequencies and a channel gain
profile; a record is the gain-weighted sum of those sinusoids (random phase
per record) plus Gaussian noise.  Everything derives from the spec seed, so
identical specs produce byte-identical datasets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SyntheticGenSpec:
    n_classes: int
    records_per_class: int
    c: int = 128
    l: int = 440
    noise_std: float = 0.1
    sample_rate: float = 1000.0
    seed: int = 0
    amplitude: float = 1.0
    sinusoids_per_class: int = 2
    # Per-record phase = class base phase + uniform(-phase_jitter, +phase_jitter).
    # pi makes phases effectively independent per record; small values model
    # stimulus-locked responses and give the time branch something to learn.
    phase_jitter: float = np.pi
    # >1 emits several records per image id (distinct subjects viewing the
    # same stimulus), so image-based splitting has something to group.
    records_per_image: int = 1
    subjects: int = 6
    class_frequencies: list[tuple[float, ...]] | None = None
    class_gains: np.ndarray | None = None

    def __post_init__(self):
        if self.n_classes < 1 or self.records_per_class < 1:
            raise ValueError("SyntheticGenSpec: n_classes and records_per_class must be >= 1")
        if self.records_per_image < 1:
            raise ValueError("SyntheticGenSpec: records_per_image must be >= 1")
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 0xC1A55]))
        if self.class_frequencies is None:
            self.class_frequencies = self._draw_frequencies(rng)
        self.class_frequencies = [tuple(float(f) for f in fs) for fs in self.class_frequencies]
        if len(self.class_frequencies) != self.n_classes:
            raise ValueError("SyntheticGenSpec: one frequency signature per class required")
        nyquist = self.sample_rate / 2.0
        for fs in self.class_frequencies:
            if any(f <= 0 or f >= nyquist for f in fs):
                raise ValueError(f"SyntheticGenSpec: frequencies must lie in (0, {nyquist}) Hz, got {fs}")
        signatures = [tuple(sorted(fs)) for fs in self.class_frequencies]
        if len(set(signatures)) != len(signatures):
            raise ValueError("SyntheticGenSpec: class frequency signatures must be pairwise distinct")
        if self.class_gains is None:
            self.class_gains = rng.uniform(0.5, 1.5, size=(self.n_classes, self.c))
        self.class_gains = np.asarray(self.class_gains, dtype=np.float64)
        if self.class_gains.shape != (self.n_classes, self.c):
            raise ValueError(
                f"SyntheticGenSpec: class_gains must be ({self.n_classes}, {self.c}), got {self.class_gains.shape}"
            )

    def _draw_frequencies(self, rng: np.random.Generator) -> list[tuple[float, ...]]:
        # Pick distinct DFT-bin-aligned frequency sets so classes stay
        # separable after any whole-record magnitude spectrum.
        import math

        bin_hz = self.sample_rate / self.l
        max_bin = self.l // 2 - 1
        usable = np.arange(2, max_bin)
        if len(usable) < self.sinusoids_per_class:
            raise ValueError("SyntheticGenSpec: signal too short for requested sinusoids")
        if math.comb(len(usable), self.sinusoids_per_class) < self.n_classes:
            raise ValueError(
                f"SyntheticGenSpec: only {math.comb(len(usable), self.sinusoids_per_class)} distinct "
                f"frequency signatures available for {self.n_classes} classes; increase l or sinusoids_per_class"
            )
        chosen: set[tuple[int, ...]] = set()
        out = []
        while len(out) < self.n_classes:
            bins = tuple(sorted(rng.choice(usable, size=self.sinusoids_per_class, replace=False).tolist()))
            if bins in chosen:
                continue
            chosen.add(bins)
            out.append(tuple(b * bin_hz for b in bins))
        return out

    @property
    def n_images(self) -> int:
        return self.n_classes * self.records_per_class

    @property
    def n_records(self) -> int:
        return self.n_images * self.records_per_image


def generate_synthetic(spec: SyntheticGenSpec):
    """Materialize the dataset described by `spec` as a list of EegRecord."""
    from .records import EegRecord

    t = np.arange(spec.l, dtype=np.float64) / spec.sample_rate
    base_rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 0xBA5E]))
    base_phases = base_rng.uniform(0.0, 2.0 * np.pi, size=(spec.n_classes, len(spec.class_frequencies[0])))
    records = []
    idx = 0
    for k in range(spec.n_classes):
        freqs = spec.class_frequencies[k]
        gains = spec.class_gains[k][:, None]  # (c, 1)
        for j in range(spec.records_per_class):
            image_id = k * spec.records_per_class + j
            for rep in range(spec.records_per_image):
                rng = np.random.default_rng(np.random.SeedSequence([spec.seed, k, j, rep]))
                signal = np.zeros((spec.c, spec.l), dtype=np.float64)
                for fi, f in enumerate(freqs):
                    phase = base_phases[k, fi] + rng.uniform(-spec.phase_jitter, spec.phase_jitter)
                    signal += gains * spec.amplitude * np.sin(2.0 * np.pi * f * t + phase)
                if spec.noise_std > 0:
                    signal += spec.noise_std * rng.standard_normal((spec.c, spec.l))
                records.append(
                    EegRecord(
                        x=signal.astype(np.float32),
                        class_label=k,
                        subject_id=idx % spec.subjects,
                        image_id=image_id,
                    )
                )
                idx += 1
    return records
