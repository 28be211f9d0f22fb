"""Semantic embedding fixtures in the BVE1 container.

Each (class_label, image_id) pair carries two target vectors: a coarse
label-level direction and a finer caption-level variant.  Fixture files stand
in for external embedding models, so the alignment stage is fully
reproducible offline.

Layout (little-endian):
    magic "BVE1" | u32 version=1 | u32 n_entries | u32 e
    per entry: u32 class_label | u32 image_id | e float32 (label vec)
               | e float32 (caption vec)
    trailer: u32 CRC32 over all entry bytes
"""

from __future__ import annotations

from dataclasses import dataclass
from io import BytesIO
from pathlib import Path

import numpy as np

from ..binio import check_crc, crc_bytes, expect_magic, pack_u32, read_exact, unpack_u32

MAGIC = b"BVE1"
VERSION = 1


@dataclass
class SemanticTargets:
    """Coarse (label) and fine (caption) embedding for one stimulus."""

    c_label: np.ndarray
    c_cap: np.ndarray

    def __post_init__(self):
        self.c_label = np.asarray(self.c_label, dtype=np.float32)
        self.c_cap = np.asarray(self.c_cap, dtype=np.float32)
        if self.c_label.shape != self.c_cap.shape or self.c_label.ndim != 1:
            raise ValueError(
                f"SemanticTargets: vectors must be 1-D and equal length, got {self.c_label.shape} / {self.c_cap.shape}"
            )


class MissingTargetError(KeyError):
    """No fixture entry for a (class_label, image_id) pair."""


class ZeroNormTargetError(ValueError):
    """A fixture vector has zero norm and cannot anchor a cosine objective."""


FixtureMap = dict[tuple[int, int], SemanticTargets]


def write_fixtures(path, fixtures: FixtureMap, e: int) -> None:
    body = BytesIO()
    for (class_label, image_id), tgt in fixtures.items():
        if tgt.c_label.shape != (e,):
            raise ValueError(f"write_fixtures: entry ({class_label},{image_id}) has dim {tgt.c_label.shape}, expected ({e},)")
        body.write(pack_u32(class_label, image_id))
        body.write(np.ascontiguousarray(tgt.c_label, dtype="<f4").tobytes())
        body.write(np.ascontiguousarray(tgt.c_cap, dtype="<f4").tobytes())
    payload = body.getvalue()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(pack_u32(VERSION, len(fixtures), e))
        fh.write(payload)
        fh.write(crc_bytes(payload))


def load_fixtures(path) -> tuple[FixtureMap, int]:
    raw = Path(path).read_bytes()
    buf = BytesIO(raw)
    expect_magic(buf, MAGIC, VERSION)
    n_entries, e = unpack_u32(buf, 2, "header")
    entry_bytes = 8 + 8 * e
    payload = read_exact(buf, entry_bytes * n_entries, "entries")
    check_crc(payload, buf)

    fixtures: FixtureMap = {}
    body = BytesIO(payload)
    for _ in range(n_entries):
        class_label, image_id = unpack_u32(body, 2, "entry header")
        c_label = np.frombuffer(read_exact(body, 4 * e, "label vector"), dtype="<f4").copy()
        c_cap = np.frombuffer(read_exact(body, 4 * e, "caption vector"), dtype="<f4").copy()
        if np.linalg.norm(c_label) == 0.0 or np.linalg.norm(c_cap) == 0.0:
            raise ZeroNormTargetError(f"entry ({class_label}, {image_id}) has a zero-norm vector")
        fixtures[(class_label, image_id)] = SemanticTargets(c_label=c_label, c_cap=c_cap)
    return fixtures, e


def lookup(fixtures: FixtureMap, class_label: int, image_id: int) -> SemanticTargets:
    try:
        return fixtures[(class_label, image_id)]
    except KeyError as exc:
        raise MissingTargetError(f"no semantic targets for class {class_label}, image {image_id}") from exc


def generate_fixtures(
    n_classes: int,
    images_per_class: int,
    e: int = 768,
    seed: int = 0,
    caption_offset: float = 0.25,
) -> FixtureMap:
    """Synthetic targets: unit class direction; caption = normalized
    (class direction + caption_offset * per-image offset).  Deterministic in
    the seed, and the label/caption angle is controlled by the offset scale."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xE3B]))
    class_dirs = rng.standard_normal((n_classes, e))
    class_dirs /= np.linalg.norm(class_dirs, axis=1, keepdims=True)
    fixtures: FixtureMap = {}
    for k in range(n_classes):
        for j in range(images_per_class):
            image_id = k * images_per_class + j
            offset = rng.standard_normal(e)
            offset /= np.linalg.norm(offset)
            cap = class_dirs[k] + caption_offset * offset
            cap /= np.linalg.norm(cap)
            fixtures[(k, image_id)] = SemanticTargets(
                c_label=class_dirs[k].astype(np.float32), c_cap=cap.astype(np.float32)
            )
    return fixtures
