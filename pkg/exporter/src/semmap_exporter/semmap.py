"""SEMMAP01 container format.

A map file is an 8-byte magic, three little-endian uint32 fields
(width, height, category count), then one float32 score row per pixel
in raster order.  Category names live in a JSON sidecar at
``<path>.json`` so the binary part keeps a fixed stride.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import (CategoryCountMismatch, FileMissing, MalformedInput,
                     NoBackgroundCategory)

MAGIC = b"SEMMAP01"
HEADER = struct.Struct("<III")
BACKGROUND = "background"


def sidecar_path(path: str | Path) -> Path:
    """The category list sits next to the payload at ``<path>.json``."""
    return Path(str(path) + ".json")


def check_categories(categories: list[str]) -> int:
    """Validate a category name list and return the background index."""
    if not isinstance(categories, list) or not categories:
        raise MalformedInput("category list must be a non-empty list")
    if not all(isinstance(c, str) for c in categories):
        raise MalformedInput("category names must all be strings")
    hits = [i for i, name in enumerate(categories) if name == BACKGROUND]
    if len(hits) != 1:
        raise NoBackgroundCategory(
            f"need exactly one {BACKGROUND!r} category, found {len(hits)}")
    return hits[0]


def write_semmap(path: str | Path, scores: np.ndarray,
                 categories: list[str]) -> None:
    """Write an (height, width, n) float32 score block plus its sidecar.

    Callers are responsible for range handling; bytes land on disk
    exactly as passed in.
    """
    arr = np.ascontiguousarray(scores, dtype="<f4")
    if arr.ndim != 3:
        raise MalformedInput(f"score block must be 3-D, got shape {arr.shape}")
    height, width, n_cat = arr.shape
    check_categories(categories)
    if n_cat != len(categories):
        raise CategoryCountMismatch(
            f"score depth {n_cat} vs {len(categories)} category names")
    head = MAGIC + HEADER.pack(width, height, n_cat)
    Path(path).write_bytes(head + arr.tobytes())
    sidecar_path(path).write_text(
        json.dumps({"categories": list(categories)}, indent=0) + "\n")


def read_semmap(path: str | Path) -> tuple[np.ndarray, list[str]]:
    """Read a map back as ((height, width, n) float32, category names)."""
    target = Path(path)
    if not target.exists():
        raise FileMissing(f"no such file: {target}")
    data = target.read_bytes()
    if not data.startswith(MAGIC):
        raise MalformedInput("bad SEMMAP01 magic")
    if len(data) < len(MAGIC) + HEADER.size:
        raise MalformedInput("truncated SEMMAP01 header")
    width, height, n_cat = HEADER.unpack_from(data, len(MAGIC))
    if width == 0 or height == 0 or n_cat == 0:
        raise MalformedInput(f"bad dimensions {width}x{height}x{n_cat}")
    off = len(MAGIC) + HEADER.size
    need = width * height * n_cat * 4
    if len(data) - off < need:
        raise MalformedInput(f"payload short by {need - (len(data) - off)} bytes")
    flat = np.frombuffer(data[off:off + need], dtype="<f4")
    scores = flat.reshape(height, width, n_cat).astype(np.float32)

    side = sidecar_path(target)
    if not side.exists():
        raise FileMissing(f"missing sidecar: {side}")
    try:
        meta = json.loads(side.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"unreadable sidecar {side}: {exc}") from exc
    categories = meta.get("categories") if isinstance(meta, dict) else meta
    if not isinstance(categories, list):
        raise MalformedInput(f"sidecar {side} lacks a category name list")
    check_categories(categories)
    if len(categories) != n_cat:
        raise CategoryCountMismatch(
            f"sidecar lists {len(categories)} categories, payload has {n_cat}")
    return scores, list(categories)
