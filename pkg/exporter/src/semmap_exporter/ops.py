"""Turn dense score tensors into SEMMAP01 files and check them afterwards.

The input side is a plain ``.npy`` dump shaped (height, width,
categories).  Export optionally softmaxes each pixel row, always clamps
into [0, 1] as float32, and writes the result byte for byte.  Verify
reads a map back and reports how far it strays from a reference tensor
pushed through the same clamp.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (CategoryCountMismatch, DimensionMismatch, FileMissing,
                     MalformedInput, RankError)
from .semmap import check_categories, read_semmap, write_semmap

# Largest score drift tolerated by verify before the exit code goes nonzero.
TOLERANCE = 1e-6


def load_tensor(path: str | Path) -> np.ndarray:
    """Load a ``.npy`` score tensor; anything but a numeric array fails."""
    target = Path(path)
    if not target.exists():
        raise FileMissing(f"no such file: {target}")
    try:
        arr = np.load(target, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise MalformedInput(f"cannot read array file {target}: {exc}") from exc
    if not isinstance(arr, np.ndarray) or arr.dtype.kind not in "fiu":
        raise MalformedInput(f"{target} does not hold a numeric array")
    return arr


def load_categories(path: str | Path) -> list[str]:
    """Read category names from JSON: a bare list or a sidecar object."""
    target = Path(path)
    if not target.exists():
        raise FileMissing(f"no such file: {target}")
    try:
        meta = json.loads(target.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"unreadable category file {target}: {exc}") from exc
    names = meta.get("categories") if isinstance(meta, dict) else meta
    if not isinstance(names, list):
        raise MalformedInput(f"{target} lacks a category name list")
    check_categories(names)
    return list(names)


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Softmax along the last axis, shift-stabilized, in float64."""
    shifted = np.asarray(logits, np.float64)
    shifted = shifted - shifted.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    return weights / weights.sum(axis=-1, keepdims=True)


def clamp_scores(tensor: np.ndarray) -> np.ndarray:
    """The on-disk value contract: float32 pinned into [0, 1]."""
    return np.clip(np.asarray(tensor, np.float32), 0.0, 1.0)


def export_tensor(tensor: np.ndarray, categories: list[str],
                  out: str | Path, softmax: bool = False) -> np.ndarray:
    """Write ``tensor`` as a SEMMAP01 map; returns the scores as written.

    The tensor must be (height, width, n) with n matching the category
    list, which in turn needs exactly one background entry.  With
    ``softmax`` the rows are treated as logits and normalized to sum
    to one first.
    """
    arr = np.asarray(tensor)
    if arr.ndim != 3:
        raise RankError(f"score tensor must be 3-D, got shape {arr.shape}")
    if arr.shape[2] != len(categories):
        raise CategoryCountMismatch(
            f"tensor depth {arr.shape[2]} vs {len(categories)} category names")
    check_categories(categories)
    if not np.all(np.isfinite(arr)):
        raise MalformedInput("score tensor holds non-finite values")
    if softmax:
        arr = softmax_rows(arr)
    scores = clamp_scores(arr)
    write_semmap(out, scores, categories)
    return scores


@dataclass
class VerifyReport:
    """Outcome of comparing a map file against a reference tensor."""

    max_abs_diff: float
    pixels: int
    categories: int

    @property
    def ok(self) -> bool:
        # NaN must not slip through a plain <= comparison.
        return self.max_abs_diff <= TOLERANCE


def verify_map(semmap_path: str | Path, tensor: np.ndarray) -> VerifyReport:
    """Compare a SEMMAP01 file element-wise against a score tensor.

    The tensor goes through the exporter's clamp first, so a file
    produced by ``export_tensor`` from the same tensor reports a diff
    of exactly zero.
    """
    scores, categories = read_semmap(semmap_path)
    arr = np.asarray(tensor)
    if arr.ndim != 3:
        raise RankError(f"reference tensor must be 3-D, got shape {arr.shape}")
    if arr.shape != scores.shape:
        raise DimensionMismatch(
            f"map shape {scores.shape} vs tensor shape {arr.shape}")
    diff = np.abs(scores - clamp_scores(arr))
    return VerifyReport(float(diff.max()), scores.shape[0] * scores.shape[1],
                        len(categories))
