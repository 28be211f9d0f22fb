"""BVD1 dataset container.

Layout (little-endian):
    magic "BVD1" | u32 version=1 | u32 n_records | u32 c | u32 l
    | u32 n_classes | u8 normalized_flag
    per record: u32 class_label | u32 subject_id | u32 image_id
                | c*l float32 row-major (channels x time)
    trailer: u32 CRC32 over all record bytes
"""

from __future__ import annotations

import struct
from io import BytesIO
from pathlib import Path

import numpy as np

from ..binio import (
    ChecksumError,
    TruncatedError,
    UnsupportedFormatError,
    check_crc,
    crc_bytes,
    expect_magic,
    pack_u32,
    read_exact,
    unpack_u32,
)
from .records import DatasetHeader, EegRecord, normalize_records

MAGIC = b"BVD1"
VERSION = 1


def write_dataset(path, records: list[EegRecord], n_classes: int, normalized: bool = False) -> None:
    if records:
        c, l = records[0].x.shape
        for r in records:
            if r.x.shape != (c, l):
                raise ValueError(f"write_dataset: record shape {r.x.shape} differs from ({c}, {l})")
    else:
        c, l = 0, 0

    body = BytesIO()
    for r in records:
        body.write(pack_u32(r.class_label, r.subject_id, r.image_id))
        body.write(np.ascontiguousarray(r.x, dtype="<f4").tobytes())
    payload = body.getvalue()

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(pack_u32(VERSION, len(records), c, l, n_classes))
        fh.write(struct.pack("<B", 1 if normalized else 0))
        fh.write(payload)
        fh.write(crc_bytes(payload))


def load_dataset(path, normalize: bool = False) -> tuple[list[EegRecord], DatasetHeader]:
    """Read a BVD1 file; `normalize` z-scores each channel unless already flagged.

    With normalize=False the returned records are bit-identical to what was
    written, so write/load round trips exactly.
    """
    raw = Path(path).read_bytes()
    buf = BytesIO(raw)
    expect_magic(buf, MAGIC, VERSION)
    n_records, c, l, n_classes = unpack_u32(buf, 4, "header")
    (norm_flag,) = struct.unpack("<B", read_exact(buf, 1, "header"))

    record_bytes = 12 + 4 * c * l
    payload = read_exact(buf, record_bytes * n_records, "records")
    check_crc(payload, buf)

    records: list[EegRecord] = []
    body = BytesIO(payload)
    for _ in range(n_records):
        class_label, subject_id, image_id = unpack_u32(body, 3, "record header")
        x = np.frombuffer(read_exact(body, 4 * c * l, "record data"), dtype="<f4").reshape(c, l)
        records.append(EegRecord(x.copy(), class_label, subject_id, image_id))

    header = DatasetHeader(n_records=n_records, c=c, l=l, n_classes=n_classes, normalized=bool(norm_flag))
    if normalize and not header.normalized:
        records = normalize_records(records)
        header.normalized = True
    return records, header


__all__ = [
    "ChecksumError",
    "TruncatedError",
    "UnsupportedFormatError",
    "load_dataset",
    "write_dataset",
]
