"""Raster I/O: images, semantic probability maps, contour maps, label maps.

Binary formats handled here:

* PPM (P6, maxval 255) for color images.
* PGM (P5) for contour strength inputs and 16-bit label map outputs.
* ``SEMMAP01``: magic ``SEMMAP01`` | u32 width | u32 height | u32 n_categories,
  then float32 little-endian probabilities, pixel-major (all categories of
  pixel 0, then pixel 1, ...).  A JSON sidecar at ``<path>.json`` lists the
  category names; exactly one must be ``"background"``.
* ``CONMAP01``: magic ``CONMAP01`` | u32 width | u32 height, then float32
  little-endian strengths, row-major.

Loaded objects are plain dataclasses and are treated as immutable.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CategoryMismatch,
    DimensionMismatch,
    FileMissing,
    IoFailure,
    MalformedImage,
    MalformedMap,
    NoBackgroundCategory,
    TooManyRegions,
    ValueOutOfRange,
)
from .util import canonical_labels

SEMMAP_MAGIC = b"SEMMAP01"
CONMAP_MAGIC = b"CONMAP01"
PROB_FLOOR = 1e-6            # probabilities are clamped, never renormalized
RANGE_SLACK = 1e-6           # tolerated overshoot before ValueOutOfRange
LABEL_MAXVAL = 65535
OVERLAY_COLOR = (255, 0, 0)  # boundary ink for write_overlay
BACKGROUND_NAME = "background"


# --- value types ------------------------------------------------------------

@dataclass
class RasterImage:
    """8-bit RGB image; `pixels` has shape (height, width, 3)."""

    width: int
    height: int
    pixels: np.ndarray


@dataclass
class SemanticMap:
    """Per-pixel category probabilities, clamped to [PROB_FLOOR, 1].

    `probs` has shape (width * height, n_categories), pixel-major row order.
    """

    width: int
    height: int
    categories: list[str]
    background_index: int
    probs: np.ndarray

    @property
    def n_categories(self) -> int:
        return len(self.categories)


@dataclass
class ContourMap:
    """Per-pixel boundary strength in [0, 1]; `strength` has shape (h, w)."""

    width: int
    height: int
    strength: np.ndarray


@dataclass
class LabelMap:
    """Integer region labels; `labels` has shape (height, width)."""

    width: int
    height: int
    labels: np.ndarray

    @property
    def n_regions(self) -> int:
        return int(np.unique(self.labels).size)


@dataclass
class SemanticSegmentation:
    """Category ids painted per pixel plus the region that produced each."""

    width: int
    height: int
    categories: list[str]
    category_ids: np.ndarray                 # (height, width) int32
    region_categories: dict[int, int] = field(default_factory=dict)


# --- low-level helpers ------------------------------------------------------

def _read_bytes(path: str | Path) -> bytes:
    p = Path(path)
    if not p.exists():
        raise FileMissing(f"no such file: {p}")
    try:
        return p.read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {p}: {exc}") from exc


def _write_bytes(path: str | Path, payload: bytes) -> None:
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _parse_pnm_header(data: bytes, magic: bytes, err: type[Exception]):
    """Parse a PNM header, returning (width, height, maxval, payload_offset).

    Whitespace and ``#`` comments are allowed between tokens; exactly one
    whitespace byte separates the maxval from the binary payload.
    """
    if not data.startswith(magic):
        raise err(f"expected {magic.decode()} header")
    pos = len(magic)
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise err("truncated header")
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        elif c.isdigit():
            end = pos
            while end < len(data) and data[end:end + 1].isdigit():
                end += 1
            fields.append(int(data[pos:end]))
            pos = end
        else:
            raise err(f"unexpected byte {c!r} in header")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise err("missing whitespace after maxval")
    width, height, maxval = fields
    if width <= 0 or height <= 0:
        raise err(f"bad dimensions {width}x{height}")
    return width, height, maxval, pos + 1


# --- images -----------------------------------------------------------------

def load_image(path: str | Path) -> RasterImage:
    """Load a binary PPM (P6, maxval 255).

    Raises FileMissing or MalformedImage on the documented failure paths.
    """
    data = _read_bytes(path)
    width, height, maxval, off = _parse_pnm_header(data, b"P6", MalformedImage)
    if maxval != 255:
        raise MalformedImage(f"maxval must be 255, got {maxval}")
    need = width * height * 3
    payload = data[off:off + need]
    if len(payload) < need:
        raise MalformedImage(f"payload short by {need - len(payload)} bytes")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3)
    return RasterImage(width, height, pixels.copy())


def write_image(img: RasterImage, path: str | Path) -> None:
    """Write a binary PPM (P6, maxval 255)."""
    header = f"P6\n{img.width} {img.height}\n255\n".encode()
    body = np.ascontiguousarray(img.pixels, dtype=np.uint8).tobytes()
    _write_bytes(path, header + body)


# --- semantic maps ----------------------------------------------------------

def sidecar_path(path: str | Path) -> Path:
    """Category sidecar lives next to the payload at ``<path>.json``."""
    return Path(str(path) + ".json")


def load_semantic_map(path: str | Path) -> SemanticMap:
    """Load a SEMMAP01 probability map and its category sidecar.

    Probabilities are clamped into [PROB_FLOOR, 1] on load and are never
    renormalized.  NaNs or a bad magic/shape raise MalformedMap; sidecar
    problems raise CategoryMismatch or NoBackgroundCategory.
    """
    data = _read_bytes(path)
    if not data.startswith(SEMMAP_MAGIC):
        raise MalformedMap("bad SEMMAP01 magic")
    if len(data) < len(SEMMAP_MAGIC) + 12:
        raise MalformedMap("truncated SEMMAP01 header")
    width, height, n_cat = struct.unpack_from("<III", data, len(SEMMAP_MAGIC))
    if width == 0 or height == 0 or n_cat == 0:
        raise MalformedMap(f"bad SEMMAP01 dimensions {width}x{height}x{n_cat}")
    off = len(SEMMAP_MAGIC) + 12
    need = width * height * n_cat * 4
    if len(data) - off < need:
        raise MalformedMap(f"payload short by {need - (len(data) - off)} bytes")
    probs = np.frombuffer(data[off:off + need], dtype="<f4")
    probs = probs.reshape(width * height, n_cat).astype(np.float32)
    if not np.all(np.isfinite(probs)):
        raise MalformedMap("non-finite probability values")

    side = sidecar_path(path)
    if not side.exists():
        raise FileMissing(f"missing sidecar: {side}")
    try:
        meta = json.loads(side.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise MalformedMap(f"unreadable sidecar {side}: {exc}") from exc
    categories = meta.get("categories") if isinstance(meta, dict) else None
    if not isinstance(categories, list) or not all(isinstance(c, str) for c in categories):
        raise MalformedMap(f"sidecar {side} lacks a category name list")
    if len(categories) != n_cat:
        raise CategoryMismatch(
            f"sidecar lists {len(categories)} categories, payload has {n_cat}")
    bkg = [i for i, name in enumerate(categories) if name == BACKGROUND_NAME]
    if len(bkg) != 1:
        raise NoBackgroundCategory(
            f"need exactly one '{BACKGROUND_NAME}' category, found {len(bkg)}")

    probs = np.clip(probs, PROB_FLOOR, 1.0)
    return SemanticMap(width, height, list(categories), bkg[0], probs)


def write_semantic_map(m: SemanticMap, path: str | Path) -> None:
    """Write a SEMMAP01 payload plus its category sidecar."""
    head = SEMMAP_MAGIC + struct.pack("<III", m.width, m.height, m.n_categories)
    body = np.ascontiguousarray(m.probs, dtype="<f4").tobytes()
    _write_bytes(path, head + body)
    sidecar_path(path).write_text(
        json.dumps({"categories": m.categories}, indent=0) + "\n")


# --- contour maps and float rasters -----------------------------------------

def read_float_raster(path: str | Path) -> np.ndarray:
    """Read a CONMAP01 float32 raster with no range restriction."""
    data = _read_bytes(path)
    if not data.startswith(CONMAP_MAGIC):
        raise MalformedMap("bad CONMAP01 magic")
    if len(data) < len(CONMAP_MAGIC) + 8:
        raise MalformedMap("truncated CONMAP01 header")
    width, height = struct.unpack_from("<II", data, len(CONMAP_MAGIC))
    if width == 0 or height == 0:
        raise MalformedMap(f"bad CONMAP01 dimensions {width}x{height}")
    off = len(CONMAP_MAGIC) + 8
    need = width * height * 4
    if len(data) - off < need:
        raise MalformedMap(f"payload short by {need - (len(data) - off)} bytes")
    values = np.frombuffer(data[off:off + need], dtype="<f4")
    return values.reshape(height, width).astype(np.float32)


def write_float_raster(values: np.ndarray, path: str | Path) -> None:
    """Write a CONMAP01 float32 raster; round-trips bit-for-bit."""
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2:
        raise MalformedMap(f"float raster must be 2-D, got shape {arr.shape}")
    head = CONMAP_MAGIC + struct.pack("<II", arr.shape[1], arr.shape[0])
    _write_bytes(path, head + arr.tobytes())


def load_contour_map(path: str | Path) -> ContourMap:
    """Load boundary strengths from CONMAP01 or PGM (P5).

    PGM samples are rescaled from [0, maxval] to [0, 1].  CONMAP01 values
    beyond [0, 1] by more than RANGE_SLACK raise ValueOutOfRange; smaller
    overshoots are clipped.
    """
    data = _read_bytes(path)
    if data.startswith(CONMAP_MAGIC):
        values = read_float_raster(path)
        if not np.all(np.isfinite(values)):
            raise MalformedMap("non-finite contour strengths")
        lo, hi = float(values.min()), float(values.max())
        if lo < -RANGE_SLACK or hi > 1.0 + RANGE_SLACK:
            raise ValueOutOfRange(f"contour strengths span [{lo}, {hi}]")
        arr = np.clip(values.astype(np.float64), 0.0, 1.0)
        return ContourMap(values.shape[1], values.shape[0], arr)
    width, height, maxval, off = _parse_pnm_header(data, b"P5", MalformedMap)
    if not 0 < maxval <= 65535:
        raise MalformedMap(f"bad PGM maxval {maxval}")
    raw = _read_gray_payload(data, off, width, height, maxval)
    return ContourMap(width, height, raw.astype(np.float64) / maxval)


def _read_gray_payload(data: bytes, off: int, width: int, height: int,
                       maxval: int) -> np.ndarray:
    """Decode P5 samples: one byte up to maxval 255, else big-endian pairs."""
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    need = width * height * dtype.itemsize if maxval >= 256 else width * height
    payload = data[off:off + need]
    if len(payload) < need:
        raise MalformedMap(f"payload short by {need - len(payload)} bytes")
    return np.frombuffer(payload, dtype=dtype).reshape(height, width)


# --- label maps -------------------------------------------------------------

def read_label_map(path: str | Path) -> LabelMap:
    """Read a 16-bit PGM label map (big-endian samples)."""
    data = _read_bytes(path)
    width, height, maxval, off = _parse_pnm_header(data, b"P5", MalformedMap)
    raw = _read_gray_payload(data, off, width, height, maxval)
    return LabelMap(width, height, raw.astype(np.int32))


def write_label_map(seg: LabelMap, path: str | Path) -> None:
    """Write a label map as PGM P5, maxval 65535, big-endian samples.

    Region connectivity is enforced: if any label id covers more than one
    4-connected component, all labels are deterministically rewritten by
    raster-scan component order.  Valid maps are written verbatim, so
    read_label_map(write_label_map(x)) == x bit for bit for them.
    """
    labels = np.asarray(seg.labels)
    if labels.shape != (seg.height, seg.width):
        raise DimensionMismatch(
            f"labels shape {labels.shape} != ({seg.height}, {seg.width})")
    labels = _enforce_connectivity(labels)
    if labels.max(initial=0) > LABEL_MAXVAL:
        raise TooManyRegions(
            f"{labels.max()} exceeds the 16-bit label limit {LABEL_MAXVAL}")
    header = f"P5\n{seg.width} {seg.height}\n{LABEL_MAXVAL}\n".encode()
    body = labels.astype(">u2").tobytes()
    _write_bytes(path, header + body)


def _enforce_connectivity(labels: np.ndarray) -> np.ndarray:
    """Relabel only when some id spans several 4-connected components."""
    comp, n_comp = _grid_components(labels)
    if n_comp == int(np.unique(labels).size):
        return labels
    canon, _ = canonical_labels(comp)
    return canon.reshape(labels.shape)


def _grid_components(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected components of equal-valued pixels, canonically numbered."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    h, w = labels.shape
    idx = np.arange(h * w).reshape(h, w)
    rows, cols = [], []
    for a, b in ((idx[:, :-1], idx[:, 1:]), (idx[:-1, :], idx[1:, :])):
        same = labels.ravel()[a.ravel()] == labels.ravel()[b.ravel()]
        rows.append(a.ravel()[same])
        cols.append(b.ravel()[same])
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(r.size, dtype=np.int8), (r, c)), shape=(h * w, h * w))
    n, comp = connected_components(graph, directed=False)
    canon, n = canonical_labels(comp)
    return canon.reshape(h, w), n


def write_ucm(ucm: np.ndarray, path: str | Path) -> None:
    """Write a boundary-strength raster (doubled grid) as CONMAP01."""
    write_float_raster(ucm, path)


def read_ucm(path: str | Path) -> np.ndarray:
    """Read back a boundary-strength raster written by write_ucm."""
    return read_float_raster(path)


# --- category maps ----------------------------------------------------------

def write_category_map(ids: np.ndarray, categories: list[str],
                       path: str | Path) -> None:
    """Write per-pixel category ids as P5 plus a sidecar naming them.

    Unlike label maps, same-category areas may be disconnected, so ids
    are written verbatim.
    """
    ids = np.asarray(ids)
    if ids.max(initial=0) >= len(categories):
        raise ValueOutOfRange(
            f"category id {ids.max()} outside the {len(categories)} names")
    h, w = ids.shape
    header = f"P5\n{w} {h}\n{LABEL_MAXVAL}\n".encode()
    _write_bytes(path, header + ids.astype(">u2").tobytes())
    sidecar_path(path).write_text(
        json.dumps({"categories": list(categories)}, indent=2) + "\n")


def read_category_map(path: str | Path) -> tuple[np.ndarray, list[str]]:
    """Read back a category-id raster and its sidecar names."""
    data = _read_bytes(path)
    width, height, maxval, off = _parse_pnm_header(data, b"P5", MalformedMap)
    ids = _read_gray_payload(data, off, width, height, maxval).astype(np.int32)
    side = sidecar_path(path)
    if not side.is_file():
        raise FileMissing(f"category sidecar not found: {side}")
    categories = json.loads(side.read_text())["categories"]
    return ids, list(categories)


# --- overlays ---------------------------------------------------------------

def write_overlay(img: RasterImage, seg: LabelMap, path: str | Path) -> None:
    """Paint region boundaries over the image in a fixed color and save PPM.

    A pixel is boundary ink when any 4-neighbor carries a different label;
    a constant label map therefore leaves the image untouched.
    """
    if (img.width, img.height) != (seg.width, seg.height):
        raise DimensionMismatch(
            f"image {img.width}x{img.height} vs labels {seg.width}x{seg.height}")
    labels = np.asarray(seg.labels)
    edge = np.zeros((img.height, img.width), dtype=bool)
    edge[:, :-1] |= labels[:, :-1] != labels[:, 1:]
    edge[:, 1:] |= labels[:, :-1] != labels[:, 1:]
    edge[:-1, :] |= labels[:-1, :] != labels[1:, :]
    edge[1:, :] |= labels[:-1, :] != labels[1:, :]
    out = img.pixels.copy()
    out[edge] = OVERLAY_COLOR
    write_image(RasterImage(img.width, img.height, out), path)
