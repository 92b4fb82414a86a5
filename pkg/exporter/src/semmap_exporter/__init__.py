"""Standalone exporter for SEMMAP01 per-pixel probability maps."""

from .errors import (CategoryCountMismatch, DimensionMismatch, ExporterError,
                     FileMissing, MalformedInput, NoBackgroundCategory,
                     RankError)
from .ops import (TOLERANCE, VerifyReport, clamp_scores, export_tensor,
                  load_categories, load_tensor, softmax_rows, verify_map)
from .semmap import BACKGROUND, MAGIC, read_semmap, sidecar_path, write_semmap

__all__ = [
    "BACKGROUND", "MAGIC", "TOLERANCE",
    "CategoryCountMismatch", "DimensionMismatch", "ExporterError",
    "FileMissing", "MalformedInput", "NoBackgroundCategory", "RankError",
    "VerifyReport", "clamp_scores", "export_tensor", "load_categories",
    "load_tensor", "read_semmap", "sidecar_path", "softmax_rows",
    "verify_map", "write_semmap",
]
