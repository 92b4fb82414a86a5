"""Shared fixture builders: random images, maps, bundles.

Oracle modules (reference_*.py) live beside the tests and are imported
from here, so the tests directory goes on sys.path.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from seglep.engine import EngineConfig, init_state
from seglep.pipeline import prepare
from seglep.raster import ContourMap, LabelMap, RasterImage, SemanticMap

CATS3 = ["background", "grass", "sky"]


def rand_image(rng, width, height):
    px = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    return RasterImage(width, height, px)


def rand_semmap(rng, width, height, categories=CATS3):
    raw = rng.random((width * height, len(categories)))
    probs = raw / raw.sum(axis=1, keepdims=True)
    probs = np.clip(probs, 1e-6, 1.0).astype(np.float32)
    return SemanticMap(width, height, list(categories),
                       list(categories).index("background"), probs)


def rand_contour(rng, width, height):
    return ContourMap(width, height, rng.random((height, width)))


def rand_bundle(seed, width, height, with_contour=True):
    rng = np.random.default_rng(seed)
    img = rand_image(rng, width, height)
    semmap = rand_semmap(rng, width, height)
    contour = rand_contour(rng, width, height) if with_contour else None
    return prepare(img, semmap, contour)


def rand_state(seed, width, height, cfg=None, with_contour=True):
    bundle = rand_bundle(seed, width, height, with_contour)
    cfg = cfg or EngineConfig()
    return init_state(bundle.image, bundle.costs, bundle.colors,
                      bundle.textons, bundle.regularity, cfg), bundle


def voronoi_labels(rng, width, height, k):
    """Connected random partition: nearest of k seed points, lowest-id ties."""
    ys, xs = np.mgrid[0:height, 0:width]
    seeds = rng.integers(0, [width, height], size=(k, 2))
    d2 = ((xs[None] - seeds[:, 0, None, None]) ** 2
          + (ys[None] - seeds[:, 1, None, None]) ** 2)
    return np.argmin(d2, axis=0).astype(np.int32)


def rand_partition(rng, width, height, k):
    """Arbitrary (possibly disconnected) random partition."""
    return rng.integers(0, k, size=(height, width)).astype(np.int32)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
