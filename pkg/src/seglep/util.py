"""Small shared helpers: union-find and deterministic label canonicalization."""

from __future__ import annotations

import os

import numpy as np


class UnionFind:
    """Array-backed disjoint sets with path halving.

    Roots are stable until :meth:`attach` reparents them, which lets callers
    use freshly allocated ids as the surviving root of a union.
    """

    def __init__(self, n: int):
        self.parent = list(range(n))

    def grow(self) -> int:
        """Allocate one new singleton and return its id."""
        rid = len(self.parent)
        self.parent.append(rid)
        return rid

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return i

    def attach(self, child: int, root: int) -> None:
        """Reparent `child`'s root under `root`. `root` must be its own root."""
        self.parent[self.find(child)] = root


def canonical_labels(assignment: np.ndarray) -> tuple[np.ndarray, int]:
    """Renumber arbitrary region ids to 0..R-1 by raster-scan first occurrence.

    The pixel order of `assignment` (flattened row-major) defines the scan, so
    the region containing the top-left-most pixel always gets label 0.
    """
    flat = np.asarray(assignment).ravel()
    _, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    # np.unique sorts by id value; re-rank by first appearance instead.
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse].astype(np.int32), int(order.size)


def worker_count() -> int:
    """Worker cap from SEGLEP_THREADS; 0 or unset means one per CPU."""
    raw = os.environ.get("SEGLEP_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        n = os.cpu_count() or 1
    return max(1, n)
