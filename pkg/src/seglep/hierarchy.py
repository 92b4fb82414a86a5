"""Merge hierarchies: thresholding, boundary rasters, semantic painting.

A hierarchy is just the merge event log plus the pixel grid it started
from.  Because event levels are clamped monotone, cutting the log at any
level yields a partition, deeper cuts only coarsen it, and the level at
which two pixels first share a region behaves as an ultrametric.

The boundary raster lives on the doubled grid: an image of w x h pixels
maps to (2h+1) x (2w+1) cells where odd/odd cells are pixels (always 0),
even cells between two pixels carry the level at which that boundary
vanished, and lattice-vertex cells take the max of their incident edges
so drawn boundaries stay closed curves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cues import SemanticCostField
from .errors import DimensionMismatch, IncompleteHierarchy
from .raster import LabelMap, SemanticSegmentation
from .util import UnionFind, canonical_labels


@dataclass
class MergeHierarchy:
    """Event log of one merging run over a width x height pixel grid."""

    width: int
    height: int
    events: list  # MergeEvent-like: needs .a .b .merged .level

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    @property
    def complete(self) -> bool:
        return len(self.events) == self.n_pixels - 1

    def levels(self) -> np.ndarray:
        return np.array([e.level for e in self.events], dtype=np.float64)


def threshold(h: MergeHierarchy, level: float) -> LabelMap:
    """Partition at `level`: apply exactly the merges strictly below it.

    Level 0 therefore returns the all-singleton pixel grid.  Labels are
    renumbered by raster-scan order of each region's first pixel.
    """
    uf = UnionFind(h.n_pixels)
    for e in h.events:
        if e.level < level:
            merged = uf.grow()
            uf.attach(e.a, merged)
            uf.attach(e.b, merged)
    roots = np.fromiter((uf.find(p) for p in range(h.n_pixels)),
                        dtype=np.int64, count=h.n_pixels)
    canon, _ = canonical_labels(roots)
    return LabelMap(h.width, h.height, canon.reshape(h.height, h.width))


# --- boundary raster --------------------------------------------------------

def edge_levels(h: MergeHierarchy) -> tuple[np.ndarray, np.ndarray]:
    """Level at which each inter-pixel boundary vanishes.

    Returns (horizontal, vertical): horizontal[y, x] is the boundary between
    pixels (x, y) and (x+1, y); vertical[y, x] between (x, y) and (x, y+1).
    Requires a complete log, since every boundary must vanish somewhere.

    The computation replays the log with its own adjacency bookkeeping, so
    it only trusts the (a, b, merged, level) fields of the events.
    """
    if not h.complete:
        raise IncompleteHierarchy(
            f"{len(h.events)} events cannot cover {h.n_pixels} pixels")
    w, ht = h.width, h.height
    n = h.n_pixels

    # Edge ids: horizontal first (y * (w-1) + x), then vertical.
    n_hor = ht * (w - 1)
    out = np.full(n_hor + (ht - 1) * w, np.nan)

    # Symmetric adjacency: region -> (possibly stale neighbor key -> edge ids).
    # Stale keys are resolved when their dict is absorbed; an edge's level is
    # assigned only once, at the event that actually removed it.
    adj: dict[int, dict[int, list[int]]] = {p: {} for p in range(n)}
    for y in range(ht):
        for x in range(w - 1):
            p, e = y * w + x, y * (w - 1) + x
            adj[p][p + 1] = [e]
            adj[p + 1][p] = [e]
    for y in range(ht - 1):
        for x in range(w):
            p, e = y * w + x, n_hor + y * w + x
            adj[p].setdefault(p + w, []).append(e)
            adj[p + w].setdefault(p, []).append(e)

    uf = UnionFind(n)
    for ev in h.events:
        merged = uf.grow()
        uf.attach(ev.a, merged)
        uf.attach(ev.b, merged)
        da = adj.pop(ev.a)
        db = adj.pop(ev.b)
        if len(da) < len(db):
            da, db = db, da
        for key, edges in db.items():
            root = uf.find(key)
            if root == merged:
                for e in edges:
                    if np.isnan(out[e]):
                        out[e] = ev.level
            else:
                da.setdefault(key, []).extend(edges)
        adj[merged] = da
    assert not np.isnan(out).any()
    return out[:n_hor].reshape(ht, w - 1), out[n_hor:].reshape(ht - 1, w)


def _close_vertices(grid: np.ndarray, combine) -> None:
    """Set vertex cells (even/even) from their incident edge cells in place."""
    padded = np.pad(grid, 1)
    vertices = grid[0::2, 0::2]
    for dy, dx in ((0, 1), (2, 1), (1, 0), (1, 2)):
        vertices[:] = combine(vertices,
                              padded[dy:dy + grid.shape[0]:2,
                                     dx:dx + grid.shape[1]:2])


def build_ucm(h: MergeHierarchy) -> np.ndarray:
    """Rasterize boundary-vanishing levels onto the doubled grid (float32)."""
    hor, ver = edge_levels(h)
    w, ht = h.width, h.height
    ucm = np.zeros((2 * ht + 1, 2 * w + 1), dtype=np.float64)
    ucm[1::2, 2:-1:2] = hor
    ucm[2:-1:2, 1::2] = ver
    _close_vertices(ucm, np.maximum)
    return ucm.astype(np.float32)


def boundary_mask(labels: np.ndarray) -> np.ndarray:
    """Doubled-grid boolean boundary map of a label image (closed curves)."""
    labels = np.asarray(labels)
    ht, w = labels.shape
    mask = np.zeros((2 * ht + 1, 2 * w + 1), dtype=bool)
    mask[1::2, 2:-1:2] = labels[:, :-1] != labels[:, 1:]
    mask[2:-1:2, 1::2] = labels[:-1, :] != labels[1:, :]
    _close_vertices(mask, np.logical_or)
    return mask


# --- semantic painting ------------------------------------------------------

def extract_semantic(seg: LabelMap, costs: SemanticCostField) -> SemanticSegmentation:
    """Give every region the category minimizing its summed code length.

    Ties pick the lowest category index.  Region provenance is recorded so
    callers can trace a painted pixel back to its region's decision.
    """
    if (seg.width, seg.height) != (costs.width, costs.height):
        raise DimensionMismatch(
            f"labels {seg.width}x{seg.height} vs costs "
            f"{costs.width}x{costs.height}")
    labels = np.asarray(seg.labels).ravel()
    n_regions = int(labels.max()) + 1
    summed = np.zeros((n_regions, costs.n_categories), dtype=np.float64)
    np.add.at(summed, labels, costs.costs)
    winner = np.argmin(summed, axis=1).astype(np.int32)
    present = np.unique(labels)
    region_categories = {int(r): int(winner[r]) for r in present}
    painted = winner[labels].reshape(seg.height, seg.width)
    return SemanticSegmentation(seg.width, seg.height, list(costs.categories),
                                painted, region_categories)


def hierarchy_from_events(events: Sequence, width: int, height: int) -> MergeHierarchy:
    """Wrap an event log; validates the count never exceeds what pixels allow."""
    events = list(events)
    if len(events) > width * height - 1:
        raise IncompleteHierarchy(
            f"{len(events)} events exceed the {width * height}-pixel grid")
    return MergeHierarchy(width, height, events)
