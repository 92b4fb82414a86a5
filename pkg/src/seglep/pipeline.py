"""Wiring from raw inputs to engine runs and hierarchies.

Cue extraction depends only on the image and contour map, never on the
engine weights, so a bundle is computed once per image and reused across
configurations (calibration leans on this).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cues import (DEFAULT_CLUSTERS, DEFAULT_TAU, ClusterAssignment,
                   EdgeWeightField, SemanticCostField, cluster_colors,
                   compute_textons, regularity_field, semantic_costs)
from .engine import EngineConfig, RunResult, init_state, run
from .hierarchy import MergeHierarchy, hierarchy_from_events
from .raster import ContourMap, RasterImage, SemanticMap


@dataclass(frozen=True)
class CueParams:
    """Knobs for cue extraction, separate from the merge criterion weights."""

    color_clusters: int = DEFAULT_CLUSTERS
    texture_clusters: int = DEFAULT_CLUSTERS
    edge_weight: float = 1.0
    grad_weight: float = 1.0
    grad_tau: float = DEFAULT_TAU


@dataclass
class ImageBundle:
    """One image with every derived cue field, ready for the engine."""

    image: RasterImage
    costs: SemanticCostField
    colors: ClusterAssignment
    textons: ClusterAssignment
    regularity: EdgeWeightField


def zero_contour(width: int, height: int) -> ContourMap:
    """Contour map of all zeros, for runs without an external detector."""
    return ContourMap(width, height,
                      np.zeros((height, width), dtype=np.float64))


def prepare(img: RasterImage, semmap: SemanticMap,
            contour: ContourMap | None = None,
            params: CueParams = CueParams()) -> ImageBundle:
    """Extract all cue fields for one image."""
    if contour is None:
        contour = zero_contour(img.width, img.height)
    return ImageBundle(
        image=img,
        costs=semantic_costs(semmap),
        colors=cluster_colors(img, params.color_clusters),
        textons=compute_textons(img, params.texture_clusters),
        regularity=regularity_field(img, contour, params.edge_weight,
                                    params.grad_weight, params.grad_tau))


def run_engine(bundle: ImageBundle, cfg: EngineConfig) -> RunResult:
    """Run the merge loop on a prepared bundle until its stop threshold."""
    state = init_state(bundle.image, bundle.costs, bundle.colors,
                       bundle.textons, bundle.regularity, cfg)
    return run(state, cfg)


def full_hierarchy(bundle: ImageBundle,
                   cfg: EngineConfig) -> tuple[RunResult, MergeHierarchy]:
    """Merge all the way to one region and wrap the log as a hierarchy."""
    open_cfg = EngineConfig(**{**cfg.__dict__, "stop_threshold": float("inf")})
    result = run_engine(bundle, open_cfg)
    h = hierarchy_from_events(result.events, bundle.image.width,
                              bundle.image.height)
    return result, h


def quantile_levels(levels: np.ndarray, count: int) -> np.ndarray:
    """Evenly spaced quantiles of the clamped merge levels, deduplicated.

    Duplicate quantiles collapse, so fewer than `count` thresholds can
    come back; an empty level set yields the single threshold 0.
    """
    levels = np.asarray(levels, dtype=np.float64)
    if levels.size == 0:
        return np.array([0.0])
    qs = np.arange(1, count + 1) / (count + 1)
    return np.unique(np.quantile(levels, qs))
