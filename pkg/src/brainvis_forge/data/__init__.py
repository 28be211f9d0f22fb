"""Dataset ingestion, synthetic generation, segmentation, and splitting."""

from .bvd import load_dataset, write_dataset
from .images import make_image, make_image_set
from .records import DatasetHeader, DatasetSplit, EegRecord, normalize_records, zscore_channels
from .segment import flatten_units, reassemble_units, segment_units
from .split import split_by_image
from .synthetic import SyntheticGenSpec, generate_synthetic

__all__ = [
    "DatasetHeader",
    "DatasetSplit",
    "EegRecord",
    "SyntheticGenSpec",
    "flatten_units",
    "generate_synthetic",
    "load_dataset",
    "make_image",
    "make_image_set",
    "normalize_records",
    "reassemble_units",
    "segment_units",
    "split_by_image",
    "write_dataset",
    "zscore_channels",
]
