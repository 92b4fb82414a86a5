"""Pixel-level cues feeding the merge engine.

Four products come out of this module:

* color cluster ids from a PCA-tree quantizer over CIELAB values,
* texture cluster ids from the same quantizer over an 8-filter bank of
  oriented difference-of-offset-Gaussian responses,
* a per-adjacency regularity field mixing contour strength with local
  color contrast,
* per-pixel category code lengths (-log2 probability) from a semantic map.

Everything is deterministic for a fixed input; ties in the quantizer are
broken by leaf creation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionMismatch
from .raster import ContourMap, RasterImage, SemanticMap

# Filter bank layout: 4 orientations x 2 scales, offsets at half a sigma.
FILTER_ORIENTATIONS = (0.0, 45.0, 90.0, 135.0)
FILTER_SIGMAS = (1.0, 2.0)

DEFAULT_CLUSTERS = 32
DEFAULT_TAU = 10.0


# --- color space ------------------------------------------------------------

_SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_D65_WHITE = np.array([0.95047, 1.0, 1.08883])


def rgb_to_lab(pixels: np.ndarray) -> np.ndarray:
    """Convert 8-bit sRGB (..., 3) to CIELAB under the D65 white point."""
    srgb = np.asarray(pixels, dtype=np.float64) / 255.0
    linear = np.where(srgb <= 0.04045,
                      srgb / 12.92,
                      ((srgb + 0.055) / 1.055) ** 2.4)
    xyz = linear @ _SRGB_TO_XYZ.T / _D65_WHITE
    eps = (6.0 / 29.0) ** 3
    f = np.where(xyz > eps,
                 np.cbrt(xyz),
                 xyz / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


# --- PCA-tree quantizer -----------------------------------------------------

@dataclass
class ClusterAssignment:
    """Cluster ids for every pixel of one feature image.

    `k` is the achieved cluster count; it can fall below `k_requested` when
    the features stop admitting further splits.  Ids always lie in [0, k).
    """

    k_requested: int
    k: int
    ids: np.ndarray  # flat, row-major, int32


def _principal_axis(centered: np.ndarray) -> np.ndarray:
    """First principal axis with a fixed sign: largest |component| positive."""
    cov = centered.T @ centered
    _, vecs = np.linalg.eigh(cov)
    axis = vecs[:, -1]
    pivot = int(np.argmax(np.abs(axis)))
    if axis[pivot] < 0.0:
        axis = -axis
    return axis


def pca_tree(features: np.ndarray, k: int) -> tuple[np.ndarray, int]:
    """Split features into at most `k` clusters by recursive PCA halving.

    The leaf with the largest total squared deviation is split along its
    first principal axis at the mean projection (strictly-below goes left).
    Ties on deviation pick the older leaf; exhausted leaves stop early.
    Returns (ids, achieved_k) with ids numbered by leaf creation order.
    """
    feats = np.asarray(features, dtype=np.float64)
    n = feats.shape[0]
    if k < 1:
        raise ValueError(f"cluster count must be >= 1, got {k}")
    # Leaves hold index arrays; creation order doubles as the tie-break key.
    leaves: list[np.ndarray] = [np.arange(n)]
    deviations: list[float] = [_total_sq_dev(feats)]
    while len(leaves) < k:
        best = -1
        best_dev = 0.0
        for i, dev in enumerate(deviations):
            if dev > best_dev:      # strict: ties keep the earlier leaf
                best, best_dev = i, dev
        if best < 0:
            break                   # nothing left to split
        members = leaves[best]
        sub = feats[members]
        centered = sub - sub.mean(axis=0)
        axis = _principal_axis(centered)
        proj = centered @ axis
        left = members[proj < proj.mean()]
        right = members[proj >= proj.mean()]
        if left.size == 0 or right.size == 0:
            deviations[best] = 0.0  # degenerate split; retire the leaf
            continue
        leaves[best] = left
        deviations[best] = _total_sq_dev(feats[left])
        leaves.append(right)
        deviations.append(_total_sq_dev(feats[right]))
    ids = np.empty(n, dtype=np.int32)
    for cid, members in enumerate(leaves):
        ids[members] = cid
    return ids, len(leaves)


def _total_sq_dev(sub: np.ndarray) -> float:
    centered = sub - sub.mean(axis=0)
    return float(np.sum(centered * centered))


def cluster_colors(img: RasterImage, k: int = DEFAULT_CLUSTERS) -> ClusterAssignment:
    """Quantize CIELAB pixel colors into at most `k` clusters."""
    lab = rgb_to_lab(img.pixels).reshape(-1, 3)
    ids, achieved = pca_tree(lab, k)
    return ClusterAssignment(k, achieved, ids)


# --- texture ----------------------------------------------------------------

def doog_kernel(theta_deg: float, sigma: float) -> np.ndarray:
    """Difference of two offset Gaussians, offset by sigma/2 along theta."""
    half = sigma / 2.0
    radius = int(np.ceil(3.0 * sigma + half))
    ys, xs = np.mgrid[-radius:radius + 1, -radius:radius + 1].astype(np.float64)
    theta = np.deg2rad(theta_deg)
    ox, oy = half * np.cos(theta), half * np.sin(theta)

    def lobe(cx, cy):
        r2 = (xs - cx) ** 2 + (ys - cy) ** 2
        return np.exp(-r2 / (2.0 * sigma * sigma)) / (2.0 * np.pi * sigma * sigma)

    return lobe(ox, oy) - lobe(-ox, -oy)


def filter_responses(img: RasterImage) -> np.ndarray:
    """Stack of 8 oriented band-pass responses over luminance, shape (n, 8).

    Responses use correlation with reflective border handling, so a constant
    image yields an all-zero feature vector at every pixel.
    """
    lum = rgb_to_lab(img.pixels)[..., 0]
    out = np.empty((img.height * img.width, len(FILTER_ORIENTATIONS) * len(FILTER_SIGMAS)))
    col = 0
    for sigma in FILTER_SIGMAS:
        for theta in FILTER_ORIENTATIONS:
            resp = ndimage.correlate(lum, doog_kernel(theta, sigma), mode="reflect")
            out[:, col] = resp.ravel()
            col += 1
    return out


def compute_textons(img: RasterImage, k: int = DEFAULT_CLUSTERS) -> ClusterAssignment:
    """Quantize the filter-response vectors into at most `k` texture clusters."""
    ids, achieved = pca_tree(filter_responses(img), k)
    return ClusterAssignment(k, achieved, ids)


# --- regularity field -------------------------------------------------------

@dataclass
class EdgeWeightField:
    """Per-adjacency regularity weights, split into their two ingredients.

    `*_h` arrays cover horizontal neighbors (shape (h, w-1)); `*_v` arrays
    cover vertical neighbors (shape (h-1, w)).  Entries already carry their
    mixing weights, so the final regularity is simply contour + color.
    """

    width: int
    height: int
    contour_h: np.ndarray
    color_h: np.ndarray
    contour_v: np.ndarray
    color_v: np.ndarray

    def total_h(self) -> np.ndarray:
        return self.contour_h + self.color_h

    def total_v(self) -> np.ndarray:
        return self.contour_v + self.color_v


def regularity_field(img: RasterImage, contour: ContourMap,
                     w_edge: float = 1.0, w_grad: float = 1.0,
                     tau: float = DEFAULT_TAU) -> EdgeWeightField:
    """Build the regularity weight for every 4-adjacent pixel pair.

    Each pair (p, q) gets
    ``w_edge * max(con(p), con(q)) + w_grad * (1 - exp(-|Lab(p)-Lab(q)| / tau))``.
    Identical colors with zero contour therefore contribute exactly zero.
    """
    if (img.width, img.height) != (contour.width, contour.height):
        raise DimensionMismatch(
            f"image {img.width}x{img.height} vs contour "
            f"{contour.width}x{contour.height}")
    lab = rgb_to_lab(img.pixels)
    con = np.asarray(contour.strength, dtype=np.float64)

    def pair_terms(a_sl, b_sl):
        dist = np.linalg.norm(lab[a_sl] - lab[b_sl], axis=-1)
        color = w_grad * (1.0 - np.exp(-dist / tau))
        edge = w_edge * np.maximum(con[a_sl], con[b_sl])
        return edge, color

    con_h, col_h = pair_terms(np.s_[:, :-1], np.s_[:, 1:])
    con_v, col_v = pair_terms(np.s_[:-1, :], np.s_[1:, :])
    return EdgeWeightField(img.width, img.height, con_h, col_h, con_v, col_v)


# --- semantic code lengths --------------------------------------------------

@dataclass
class SemanticCostField:
    """Per-pixel, per-category code lengths in bits; shape (n_pixels, n_cat)."""

    width: int
    height: int
    categories: list[str]
    background_index: int
    costs: np.ndarray

    @property
    def n_categories(self) -> int:
        return len(self.categories)


def semantic_costs(m: SemanticMap) -> SemanticCostField:
    """Turn clamped probabilities into additive code lengths (-log2 p).

    The clamp floor bounds every cost by -log2(PROB_FLOOR) ~= 19.93 bits.
    """
    costs = -np.log2(np.asarray(m.probs, dtype=np.float64))
    return SemanticCostField(m.width, m.height, list(m.categories),
                             m.background_index, costs)
