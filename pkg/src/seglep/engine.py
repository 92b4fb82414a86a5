"""Greedy region merging driven by a unit merging cost.

The engine starts from one region per pixel and repeatedly merges the
adjacent pair whose cost per unit of boundary tracing load is smallest.
The cost numerator mixes code-length increases from color, texture and
semantic cues (gated by a logistic noise switch on boundary regularity)
with an insufficiency surcharge for background-background merges and the
regularity mass of the vanishing boundary itself.

Priorities live in a direct-access bucket table.  Entries are never
eagerly deleted: a merge rebuilds the new region's adjacency, inserts
fresh entries for its pairs, and bumps version counters on regions whose
junction corners moved.  Superseded entries are dropped and version-stale
ones recomputed when they surface.  This lazy scheme is exact because a
pair that is not itself merged can only lose junction corners, never gain
boundary, so its cost can only grow while the stored key stays a lower
bound.  Within a bucket the minimum is selected by exact (cost, pair id)
order, which makes the whole merge sequence independent of table history.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy.special import expit

from .cues import ClusterAssignment, EdgeWeightField, SemanticCostField
from .errors import (
    DeadRegion,
    DimensionMismatch,
    EmptyTable,
    Exhausted,
    NotAdjacent,
)
from .raster import LabelMap, RasterImage
from .util import UnionFind, canonical_labels

BUCKET_CAP = 1 << 20  # costs beyond cap * bucket_width share one overflow bucket


# --- configuration ----------------------------------------------------------

@dataclass(frozen=True)
class ConstantPrior:
    """Position-independent probability that background labels hide a split."""

    value: float = 0.5


@dataclass(frozen=True)
class RadialPrior:
    """Prior rising linearly with distance from the image center.

    Evaluated at a boundary's midpoint; the image corner pins `eta_max`.
    """

    eta_min: float = 0.2
    eta_max: float = 0.8


EtaPrior = Union[ConstantPrior, RadialPrior]


def eta_at(prior: EtaPrior, x: float, y: float, width: int, height: int) -> float:
    """Evaluate the insufficiency prior at pixel coordinates (x, y)."""
    if isinstance(prior, ConstantPrior):
        return prior.value
    cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
    reach = math.hypot(cx, cy)
    if reach == 0.0:
        return prior.eta_min
    r = min(math.hypot(x - cx, y - cy) / reach, 1.0)
    return prior.eta_min + (prior.eta_max - prior.eta_min) * r


@dataclass
class EngineConfig:
    """All tunable knobs of the merge criterion and its schedule."""

    color_weight: float = 1.0
    texture_weight: float = 1.0
    semantic_weight: float = 1.0
    regularity_weight: float = 1.0
    insufficiency_weight: float = 1.0
    gate_sharpness: float = 4.0      # logistic slope of the noise gate
    gate_midpoint: float = 0.5       # regularity-per-load where the gate is 1/2
    label_cost_gap: float = 2.2      # bits per pixel separating rival labels
    background_prior: EtaPrior = field(default_factory=ConstantPrior)
    stop_threshold: float = math.inf
    edge_load: float = 1.0           # tracing load per boundary pixel-edge
    corner_load: float = 5.0         # tracing load per junction corner
    bucket_width: float = 1e-4

    def validate(self) -> None:
        weights = (self.color_weight, self.texture_weight, self.semantic_weight,
                   self.regularity_weight, self.insufficiency_weight)
        if any(w < 0 for w in weights):
            raise ValueError("criterion weights must be non-negative")
        if self.gate_sharpness < 0:
            raise ValueError("gate sharpness must be non-negative")
        if self.label_cost_gap < 0:
            raise ValueError("label cost gap must be non-negative")
        if self.edge_load <= 0:
            raise ValueError("edge load must be positive to keep loads positive")
        if self.corner_load < 0 or self.bucket_width <= 0:
            raise ValueError("corner load must be >= 0 and bucket width > 0")
        if self.stop_threshold < 0:
            raise ValueError("stop threshold must be non-negative")
        if isinstance(self.background_prior, ConstantPrior):
            if not 0.0 <= self.background_prior.value <= 1.0:
                raise ValueError("background prior must lie in [0, 1]")
        else:
            pr = self.background_prior
            if not (0.0 <= pr.eta_min <= 1.0 and 0.0 <= pr.eta_max <= 1.0):
                raise ValueError("background prior bounds must lie in [0, 1]")

    def to_dict(self) -> dict:
        prior: dict[str, float | str]
        if isinstance(self.background_prior, ConstantPrior):
            prior = {"kind": "constant", "value": self.background_prior.value}
        else:
            prior = {"kind": "radial",
                     "eta_min": self.background_prior.eta_min,
                     "eta_max": self.background_prior.eta_max}
        out = {
            "color_weight": self.color_weight,
            "texture_weight": self.texture_weight,
            "semantic_weight": self.semantic_weight,
            "regularity_weight": self.regularity_weight,
            "insufficiency_weight": self.insufficiency_weight,
            "gate_sharpness": self.gate_sharpness,
            "gate_midpoint": self.gate_midpoint,
            "label_cost_gap": self.label_cost_gap,
            "background_prior": prior,
            "stop_threshold": None if math.isinf(self.stop_threshold)
                              else self.stop_threshold,
            "edge_load": self.edge_load,
            "corner_load": self.corner_load,
            "bucket_width": self.bucket_width,
        }
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "EngineConfig":
        kwargs = dict(data)
        prior = kwargs.pop("background_prior", None)
        if prior is not None:
            if prior.get("kind") == "radial":
                kwargs["background_prior"] = RadialPrior(
                    float(prior["eta_min"]), float(prior["eta_max"]))
            else:
                kwargs["background_prior"] = ConstantPrior(float(prior["value"]))
        stop = kwargs.get("stop_threshold")
        kwargs["stop_threshold"] = math.inf if stop is None else float(stop)
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


# --- merge criterion pieces -------------------------------------------------

@dataclass
class MergeDeltas:
    """Per-cue code-length increases for one candidate merge, in bits."""

    color: float
    texture: float
    semantic: float
    regularity: float
    insufficiency: float


def soft_switch(regularity_sum: float, load: float,
                sharpness: float, midpoint: float) -> float:
    """Logistic noise gate on regularity per unit load; 0.5 at the midpoint."""
    return float(expit(sharpness * (regularity_sum / load - midpoint)))


def unit_merging_cost(deltas: MergeDeltas, gate: float, load: float,
                      cfg: EngineConfig) -> float:
    """Combine gated appearance terms with ungated surcharges, per unit load."""
    appearance = (cfg.color_weight * deltas.color
                  + cfg.texture_weight * deltas.texture
                  + cfg.semantic_weight * deltas.semantic)
    numerator = (gate * appearance
                 + cfg.insufficiency_weight * deltas.insufficiency
                 + cfg.regularity_weight * deltas.regularity)
    return numerator / load


def _hist_complexity(hist: np.ndarray) -> float:
    """Total code length of a histogram: n * H(hist) in bits."""
    n = float(hist.sum())
    if n <= 0.0:
        return 0.0
    nz = hist[hist > 0].astype(np.float64)
    return float(n * np.log2(n) - np.sum(nz * np.log2(nz)))


# --- boundary segments and the priority table -------------------------------

@dataclass
class Seg:
    """Shared boundary between two live regions.

    `corner_count` tallies lattice vertices touched by this boundary where at
    least three regions meet (each such vertex counts once per segment).
    Midpoint sums accumulate crossing-edge midpoints for the radial prior.
    """

    a: int
    b: int
    edge_count: int
    corner_count: int
    regularity_sum: float
    mid_x_sum: float
    mid_y_sum: float

    def midpoint(self) -> tuple[float, float]:
        return self.mid_x_sum / self.edge_count, self.mid_y_sum / self.edge_count


def tracing_load(seg: Seg, cfg: EngineConfig) -> float:
    """Effort to trace a boundary: edges plus a premium for junction corners."""
    return cfg.edge_load * seg.edge_count + cfg.corner_load * seg.corner_count


class DirectAccessTable:
    """Bucketed priority store over candidate pair costs.

    Buckets quantize cost by `bucket_width` and a cursor tracks the lowest
    non-empty bucket; inside a bucket entries order by exact (cost, pair id).
    Entries are tuples (cost, a, b, seq, stamp_a, stamp_b); `resolve` decides
    on pop whether an entry is current, superseded, or in need of recompute.
    """

    def __init__(self, bucket_width: float):
        if bucket_width <= 0:
            raise ValueError("bucket width must be positive")
        self.bucket_width = bucket_width
        self._buckets: list[list[tuple]] = []
        self._cursor = 0
        self._count = 0
        self._seq = 0

    def __len__(self) -> int:
        return self._count

    def push(self, cost: float, a: int, b: int,
             stamp_a: int, stamp_b: int) -> None:
        idx = min(max(int(cost / self.bucket_width), 0), BUCKET_CAP)
        if idx >= len(self._buckets):
            self._buckets.extend([] for _ in range(idx + 1 - len(self._buckets)))
        heapq.heappush(self._buckets[idx], (cost, a, b, self._seq, stamp_a, stamp_b))
        self._seq += 1
        self._count += 1
        if idx < self._cursor:
            self._cursor = idx  # recomputed costs may fall, so roll back

    def pop_min(self, resolve) -> tuple:
        """Pop entries until `resolve` accepts one; reinsert stale rewrites.

        `resolve(entry)` returns ("fresh",), ("drop",) or
        ("reinsert", cost, a, b, stamp_a, stamp_b).
        """
        while self._count:
            while (self._cursor < len(self._buckets)
                   and not self._buckets[self._cursor]):
                self._cursor += 1
            if self._cursor >= len(self._buckets):
                break
            entry = heapq.heappop(self._buckets[self._cursor])
            self._count -= 1
            verdict = resolve(entry)
            if verdict[0] == "fresh":
                return entry
            if verdict[0] == "reinsert":
                _, cost, a, b, sa, sb = verdict
                self.push(cost, a, b, sa, sb)
        raise EmptyTable("no candidate pairs remain")


# --- merge state ------------------------------------------------------------

@dataclass
class RegionStats:
    """Read-only snapshot of one live region's accumulated statistics."""

    region: int
    size: int
    color_hist: np.ndarray
    texture_hist: np.ndarray
    label_costs: np.ndarray
    label: int
    internal_regularity: float
    version: int


@dataclass
class MergeEvent:
    """One merge: which pair vanished, what replaced it, and at what cost."""

    ordinal: int
    a: int
    b: int
    merged: int
    cost: float
    level: float     # monotone clamp of cost; the hierarchy's boundary scale
    label: int

    def to_json_obj(self) -> dict:
        return {"t": self.ordinal, "a": self.a, "b": self.b,
                "new": self.merged, "lambda_raw": self.cost,
                "lambda_star": self.level, "label": self.label}


@dataclass
class PoppedPair:
    """Result of pop_min: the currently cheapest mergeable pair."""

    a: int
    b: int
    cost: float
    seg: Seg


class MergeState:
    """All live bookkeeping of one merging run.

    Regions are numbered 0..n-1 for pixels (row-major) and n+t for the
    region created by merge t, so ids never recycle.  `adj` maps each live
    region to its boundary segments (shared Seg objects), `contacts` keeps
    the interior lattice vertices each region touches, and `groups` buckets
    live regions by their current semantic label.
    """

    def __init__(self, width: int, height: int, costs: SemanticCostField,
                 color_ids: np.ndarray, texture_ids: np.ndarray,
                 n_color: int, n_texture: int):
        n = width * height
        cap = 2 * n - 1 if n > 1 else 1
        self.width = width
        self.height = height
        self.n_pixels = n
        self.n_live = n
        self.categories = list(costs.categories)
        self.background_index = costs.background_index
        self.cost_field = costs

        self.uf = UnionFind(n)
        self.size = np.zeros(cap, dtype=np.int64)
        self.color_hist = np.zeros((cap, n_color), dtype=np.int64)
        self.texture_hist = np.zeros((cap, n_texture), dtype=np.int64)
        self.label_costs = np.zeros((cap, costs.n_categories), dtype=np.float64)
        self.internal_regularity = np.zeros(cap, dtype=np.float64)
        self.color_complexity = np.zeros(cap, dtype=np.float64)
        self.texture_complexity = np.zeros(cap, dtype=np.float64)
        self.semantic_complexity = np.zeros(cap, dtype=np.float64)
        self.label = np.zeros(cap, dtype=np.int32)
        self.version = np.zeros(cap, dtype=np.int64)
        self.alive = np.zeros(cap, dtype=bool)

        self.size[:n] = 1
        self.color_hist[np.arange(n), color_ids] = 1
        self.texture_hist[np.arange(n), texture_ids] = 1
        self.label_costs[:n] = costs.costs
        self.label[:n] = np.argmin(costs.costs, axis=1)
        self.semantic_complexity[:n] = costs.costs.min(axis=1)
        self.alive[:n] = True

        self.adj: dict[int, dict[int, Seg]] = {p: {} for p in range(n)}
        self.contacts: dict[int, set[int]] = {}
        self.groups: dict[int, set[int]] = {}
        for p in range(n):
            self.groups.setdefault(int(self.label[p]), set()).add(p)

        self.table: DirectAccessTable | None = None
        self.events: list[MergeEvent] = []
        self.level_floor = 0.0
        self.raw_order_violations = 0

    # -- queries -------------------------------------------------------------

    def require_live(self, region: int) -> None:
        if not (0 <= region < self.alive.size and self.alive[region]):
            raise DeadRegion(f"region {region} is not live")

    def segment(self, a: int, b: int) -> Seg:
        self.require_live(a)
        self.require_live(b)
        seg = self.adj[a].get(b)
        if seg is None:
            raise NotAdjacent(f"regions {a} and {b} share no boundary")
        return seg

    def region_stats(self, region: int) -> RegionStats:
        self.require_live(region)
        return RegionStats(
            region=region,
            size=int(self.size[region]),
            color_hist=self.color_hist[region].copy(),
            texture_hist=self.texture_hist[region].copy(),
            label_costs=self.label_costs[region].copy(),
            label=int(self.label[region]),
            internal_regularity=float(self.internal_regularity[region]),
            version=int(self.version[region]),
        )

    def live_regions(self) -> list[int]:
        return [int(r) for r in np.flatnonzero(self.alive)]

    def pixel_roots(self) -> np.ndarray:
        return np.fromiter((self.uf.find(p) for p in range(self.n_pixels)),
                           dtype=np.int64, count=self.n_pixels)

    def label_map(self) -> LabelMap:
        canon, _ = canonical_labels(self.pixel_roots())
        return LabelMap(self.width, self.height,
                        canon.reshape(self.height, self.width))

    # -- junction corner recount (local) -------------------------------------

    def _vertex_pixels(self, vertex: int) -> tuple[int, int, int, int]:
        """The four pixels around an interior lattice vertex, row-major ids."""
        vy, vx = divmod(vertex, self.width + 1)
        base = (vy - 1) * self.width + (vx - 1)
        return base, base + 1, base + self.width, base + self.width + 1

    def _vertex_pairs(self, vertex: int) -> list[tuple[int, int]]:
        """Segments picking up one corner at this vertex (junctions only)."""
        nw, ne, sw, se = (self.uf.find(p) for p in self._vertex_pixels(vertex))
        if len({nw, ne, sw, se}) < 3:
            return []
        pairs = set()
        for p, q in ((nw, ne), (sw, se), (nw, sw), (ne, se)):
            if p != q:
                pairs.add((p, q) if p < q else (q, p))
        return sorted(pairs)


# --- construction -----------------------------------------------------------

def init_state(img: RasterImage, costs: SemanticCostField,
               colors: ClusterAssignment, textons: ClusterAssignment,
               regularity: EdgeWeightField, cfg: EngineConfig) -> MergeState:
    """Build the one-region-per-pixel start state and fill the table.

    All cue rasters must share the image grid; DimensionMismatch otherwise.
    """
    cfg.validate()
    w, h = img.width, img.height
    n = w * h
    for name, (cw, ch) in (("semantic costs", (costs.width, costs.height)),
                           ("regularity", (regularity.width, regularity.height))):
        if (cw, ch) != (w, h):
            raise DimensionMismatch(f"{name} grid {cw}x{ch} != image {w}x{h}")
    for name, ids in (("color ids", colors.ids), ("texture ids", textons.ids)):
        if ids.shape[0] != n:
            raise DimensionMismatch(f"{name} cover {ids.shape[0]} pixels, image has {n}")

    state = MergeState(w, h, costs, colors.ids, textons.ids, colors.k, textons.k)

    # Interior lattice vertices each pixel touches (vertex ids on the
    # (w+1) x (h+1) lattice; border vertices can never be junctions).
    for y in range(h):
        for x in range(w):
            touched = set()
            for vy in (y, y + 1):
                for vx in (x, x + 1):
                    if 1 <= vx <= w - 1 and 1 <= vy <= h - 1:
                        touched.add(vy * (w + 1) + vx)
            state.contacts[y * w + x] = touched

    total_h = regularity.total_h()
    total_v = regularity.total_v()
    segs: list[Seg] = []
    for y in range(h):
        for x in range(w - 1):
            p = y * w + x
            seg = Seg(p, p + 1, 1, int(y > 0) + int(y < h - 1),
                      float(total_h[y, x]), x + 0.5, float(y))
            segs.append(seg)
    for y in range(h - 1):
        for x in range(w):
            p = y * w + x
            seg = Seg(p, p + w, 1, int(x > 0) + int(x < w - 1),
                      float(total_v[y, x]), float(x), y + 0.5)
            segs.append(seg)

    state.table = DirectAccessTable(cfg.bucket_width)
    for seg in segs:
        state.adj[seg.a][seg.b] = seg
        state.adj[seg.b][seg.a] = seg
        cost = _pair_cost(state, seg, cfg)
        state.table.push(cost, seg.a, seg.b,
                         int(state.version[seg.a]), int(state.version[seg.b]))
    return state


# --- criterion evaluation ---------------------------------------------------

def _deltas(state: MergeState, seg: Seg, cfg: EngineConfig) -> MergeDeltas:
    a, b = seg.a, seg.b
    color = (_hist_complexity(state.color_hist[a] + state.color_hist[b])
             - state.color_complexity[a] - state.color_complexity[b])
    texture = (_hist_complexity(state.texture_hist[a] + state.texture_hist[b])
               - state.texture_complexity[a] - state.texture_complexity[b])
    semantic = (float(np.min(state.label_costs[a] + state.label_costs[b]))
                - state.semantic_complexity[a] - state.semantic_complexity[b])
    insufficiency = 0.0
    bkg = state.background_index
    if state.label[a] == bkg and state.label[b] == bkg:
        mx, my = seg.midpoint()
        eta = eta_at(cfg.background_prior, mx, my, state.width, state.height)
        insufficiency = (eta * cfg.label_cost_gap
                         * float(min(state.size[a], state.size[b])))
    return MergeDeltas(color, texture, semantic, seg.regularity_sum, insufficiency)


def _pair_cost(state: MergeState, seg: Seg, cfg: EngineConfig) -> float:
    deltas = _deltas(state, seg, cfg)
    load = tracing_load(seg, cfg)
    gate = soft_switch(seg.regularity_sum, load, cfg.gate_sharpness,
                       cfg.gate_midpoint)
    return unit_merging_cost(deltas, gate, load, cfg)


def delta_components(state: MergeState, a: int, b: int,
                     cfg: EngineConfig) -> MergeDeltas:
    """Code-length increases for merging two live adjacent regions."""
    return _deltas(state, state.segment(a, b), cfg)


def background_delta(state: MergeState, a: int, b: int,
                     cfg: EngineConfig) -> float:
    """Insufficiency surcharge in bits; zero unless both labels are background."""
    return delta_components(state, a, b, cfg).insufficiency


# --- merging ----------------------------------------------------------------

def merge_regions(state: MergeState, a: int, b: int, cfg: EngineConfig,
                  cost: float | None = None) -> MergeEvent:
    """Merge two live adjacent regions and restore every invariant.

    Structure updates are eager (new segments, corner recounts at lattice
    vertices both regions touch); priority entries of the new region's pairs
    are inserted immediately, while entries elsewhere are only invalidated
    through version bumps and fixed lazily when they surface.
    """
    seg = state.segment(a, b)
    if cost is None:
        cost = _pair_cost(state, seg, cfg)
    a, b = seg.a, seg.b

    # Corner census before the union, at vertices both regions touch.
    shared_vertices = sorted(state.contacts[a] & state.contacts[b])
    old_counts: dict[tuple[int, int], int] = {}
    for v in shared_vertices:
        for pair in state._vertex_pairs(v):
            old_counts[pair] = old_counts.get(pair, 0) + 1

    merged = state.uf.grow()
    state.uf.attach(a, merged)
    state.uf.attach(b, merged)

    # Accumulate statistics; complexities are recomputed once per merge.
    state.size[merged] = state.size[a] + state.size[b]
    state.color_hist[merged] = state.color_hist[a] + state.color_hist[b]
    state.texture_hist[merged] = state.texture_hist[a] + state.texture_hist[b]
    state.label_costs[merged] = state.label_costs[a] + state.label_costs[b]
    state.internal_regularity[merged] = (state.internal_regularity[a]
                                         + state.internal_regularity[b]
                                         + seg.regularity_sum)
    state.color_complexity[merged] = _hist_complexity(state.color_hist[merged])
    state.texture_complexity[merged] = _hist_complexity(state.texture_hist[merged])
    state.semantic_complexity[merged] = float(np.min(state.label_costs[merged]))
    state.label[merged] = int(np.argmin(state.label_costs[merged]))
    state.version[merged] = 0
    state.alive[a] = False
    state.alive[b] = False
    state.alive[merged] = True

    state.groups[int(state.label[a])].discard(a)
    state.groups[int(state.label[b])].discard(b)
    state.groups.setdefault(int(state.label[merged]), set()).add(merged)

    # Corner census after the union; diff what the relabeling coalesced.
    new_counts: dict[tuple[int, int], int] = {}
    interior: list[int] = []
    for v in shared_vertices:
        pixels = [state.uf.find(p) for p in state._vertex_pixels(v)]
        if len(set(pixels)) == 1:
            interior.append(v)
        for pair in state._vertex_pairs(v):
            new_counts[pair] = new_counts.get(pair, 0) + 1
    deltas: dict[tuple[int, int], int] = dict(new_counts)
    for (p, q), cnt in old_counts.items():
        p = merged if p in (a, b) else p
        q = merged if q in (a, b) else q
        if p == q:
            continue  # the merged boundary itself; its corners die with it
        key = (p, q) if p < q else (q, p)
        deltas[key] = deltas.get(key, 0) - cnt

    # Rebuild adjacency around the merged region, fusing parallel segments.
    new_nbrs: dict[int, Seg] = {}
    for side in (a, b):
        for nb, s in state.adj[side].items():
            if nb in (a, b):
                continue
            tgt = new_nbrs.get(nb)
            if tgt is None:
                new_nbrs[nb] = Seg(min(nb, merged), max(nb, merged),
                                   s.edge_count, s.corner_count,
                                   s.regularity_sum, s.mid_x_sum, s.mid_y_sum)
            else:
                tgt.edge_count += s.edge_count
                tgt.corner_count += s.corner_count
                tgt.regularity_sum += s.regularity_sum
                tgt.mid_x_sum += s.mid_x_sum
                tgt.mid_y_sum += s.mid_y_sum

    for (p, q), diff in sorted(deltas.items()):
        if diff == 0:
            continue
        if q == merged:
            new_nbrs[p].corner_count += diff
        elif p == merged:
            new_nbrs[q].corner_count += diff
        else:
            # A third-party boundary moved: its load changed, so stamp both
            # owners stale.  Their costs can only have grown (corners only
            # vanish), keeping lazily stored keys valid lower bounds.
            state.adj[p][q].corner_count += diff
            state.version[p] += 1
            state.version[q] += 1

    del state.adj[a]
    del state.adj[b]
    state.adj[merged] = new_nbrs
    for nb, s in new_nbrs.items():
        state.adj[nb].pop(a, None)
        state.adj[nb].pop(b, None)
        state.adj[nb][merged] = s

    touched = state.contacts.pop(a) | state.contacts.pop(b)
    for v in interior:
        touched.discard(v)
    state.contacts[merged] = touched

    assert state.table is not None
    for nb in sorted(new_nbrs):
        fresh = _pair_cost(state, new_nbrs[nb], cfg)
        state.table.push(fresh, min(nb, merged), max(nb, merged),
                         int(state.version[min(nb, merged)]),
                         int(state.version[max(nb, merged)]))

    level = max(cost, state.level_floor)
    if cost < state.level_floor:
        state.raw_order_violations += 1
    state.level_floor = level
    event = MergeEvent(len(state.events), a, b, merged, cost, level,
                       int(state.label[merged]))
    state.events.append(event)
    state.n_live -= 1
    return event


def pop_min(state: MergeState, cfg: EngineConfig) -> PoppedPair:
    """Surface the cheapest current pair, fixing stale entries on the way."""
    assert state.table is not None

    def resolve(entry):
        _, ea, eb, _, sa, sb = entry
        ra, rb = state.uf.find(ea), state.uf.find(eb)
        if ra == rb:
            return ("drop",)
        lo, hi = (ra, rb) if ra < rb else (rb, ra)
        if (lo, hi) != (ea, eb):
            return ("drop",)  # renamed pair; its fresh entry was pushed at merge
        if sa != state.version[ea] or sb != state.version[eb]:
            cost = _pair_cost(state, state.adj[ea][eb], cfg)
            return ("reinsert", cost, ea, eb,
                    int(state.version[ea]), int(state.version[eb]))
        return ("fresh",)

    cost, a, b, _, _, _ = state.table.pop_min(resolve)
    return PoppedPair(a, b, cost, state.adj[a][b])


def merge_step(state: MergeState, cfg: EngineConfig) -> MergeEvent:
    """Pop the cheapest pair and merge it."""
    if state.n_live < 2:
        raise Exhausted("fewer than two live regions")
    popped = pop_min(state, cfg)
    return merge_regions(state, popped.a, popped.b, cfg, cost=popped.cost)


@dataclass
class RunResult:
    """Final partition of a merging run plus its full event log."""

    state: MergeState
    events: list[MergeEvent]
    label_map: LabelMap
    groups: dict[int, list[int]]


def run(state: MergeState, cfg: EngineConfig) -> RunResult:
    """Merge while the cheapest pair stays below the stop threshold."""
    while state.n_live >= 2:
        try:
            popped = pop_min(state, cfg)
        except EmptyTable:
            break
        if not popped.cost < cfg.stop_threshold:
            state.table.push(popped.cost, popped.a, popped.b,
                             int(state.version[popped.a]),
                             int(state.version[popped.b]))
            break
        merge_regions(state, popped.a, popped.b, cfg, cost=popped.cost)
    groups = {lab: sorted(members)
              for lab, members in sorted(state.groups.items()) if members}
    return RunResult(state, state.events, state.label_map(), groups)
