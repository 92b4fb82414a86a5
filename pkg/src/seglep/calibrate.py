"""Coordinate grid search over merge-criterion weights.

The objective for a candidate configuration is the best shared-threshold
score over the training images, with thresholds taken as quantiles of the
pooled merge levels.  The stop threshold is therefore swept implicitly
and must not appear in the search space.

The search is seed-free and deterministic: parameters move in the order
the space dictionary lists them, ties keep the earlier grid point, and a
cycle with no improvement ends the coordinate phase.  One final pass
probes midpoints between the incumbent and its grid neighbours, standing
in for a local descent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyTrainSet
from .engine import EngineConfig
from .hierarchy import boundary_mask, threshold
from .metrics import (ScoreSweep, boundary_f, covering, default_tolerance,
                      ods_ois, pri, voi)
from .pipeline import ImageBundle, full_hierarchy, quantile_levels
from .raster import LabelMap

DEFAULT_SWEEP_POINTS = 99

# Objective id -> (per-image scorer against all annotators, better direction).
OBJECTIVES = {
    "covering": (lambda p, gts, tol: float(np.mean([covering(p, g)
                                                    for g in gts])), "max"),
    "pri": (lambda p, gts, tol: pri(p, gts), "max"),
    "voi": (lambda p, gts, tol: float(np.mean([voi(p, g)
                                               for g in gts])), "min"),
    "boundary_f": (lambda p, gts, tol: boundary_f(
        boundary_mask(p.labels), [boundary_mask(g.labels) for g in gts],
        tol)[2], "max"),
}


@dataclass
class TrainItem:
    """One training image: prepared cues plus its annotations."""

    bundle: ImageBundle
    gts: list[LabelMap]


@dataclass
class SearchResult:
    config: EngineConfig
    score: float
    trace: list[float]        # incumbent objective after every parameter step


def _objective_value(train: list[TrainItem], cfg: EngineConfig,
                     objective: str, sweep_points: int) -> float:
    scorer, better = OBJECTIVES[objective]
    hierarchies = [full_hierarchy(item.bundle, cfg)[1] for item in train]
    pooled = np.concatenate([h.levels() for h in hierarchies])
    grid = quantile_levels(pooled, sweep_points)
    rows = []
    for item, h in zip(train, hierarchies):
        tol = default_tolerance(item.bundle.image.width,
                                item.bundle.image.height)
        rows.append([scorer(threshold(h, t), item.gts, tol) for t in grid])
    sweep = ScoreSweep(grid, np.array(rows))
    return ods_ois(sweep, better)[0]


def grid_search(train: list[TrainItem], space: dict[str, list[float]],
                objective: str = "covering",
                base: EngineConfig | None = None,
                sweep_points: int = DEFAULT_SWEEP_POINTS) -> SearchResult:
    """Cyclic coordinate search over `space`, then one halved-grid pass.

    `space` maps EngineConfig field names to candidate values; the first
    grid value of each parameter seeds the incumbent unless `base`
    already sets it to a grid member.
    """
    if not train:
        raise EmptyTrainSet("calibration needs at least one training image")
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}")
    if "stop_threshold" in space:
        raise ValueError("stop_threshold is swept internally; "
                         "remove it from the space")
    base = base if base is not None else EngineConfig()

    _, better = OBJECTIVES[objective]
    sign = 1.0 if better == "max" else -1.0
    names = list(space.keys())
    grids = {n: sorted(float(v) for v in space[n]) for n in names}
    for n in names:
        if not grids[n]:
            raise ValueError(f"empty grid for {n!r}")

    current = {n: (getattr(base, n) if getattr(base, n) in grids[n]
                   else grids[n][0]) for n in names}
    cache: dict[tuple, float] = {}

    def evaluate(assign: dict[str, float]) -> float:
        key = tuple(assign[n] for n in names)
        if key not in cache:
            cfg = replace(base, **assign)
            cfg.validate()
            cache[key] = _objective_value(train, cfg, objective, sweep_points)
        return cache[key]

    def sweep_param(name: str, candidates: list[float],
                    best_score: float) -> float:
        # Earlier candidates win ties, so the incumbent value is probed
        # first to keep it sticky.
        ordered = [current[name]] + [c for c in candidates
                                     if c != current[name]]
        for value in ordered:
            score = evaluate({**current, name: value})
            if sign * score > sign * best_score:
                best_score = score
                current[name] = value
        return best_score

    best = evaluate(current)
    trace = [best]

    improved = True
    while improved:
        improved = False
        for name in names:
            before = best
            best = sweep_param(name, grids[name], best)
            trace.append(best)
            if sign * best > sign * before:
                improved = True

    # Refinement: midpoints toward the incumbent's grid neighbours.
    for name in names:
        g = grids[name]
        v = current[name]
        mids = []
        below = [x for x in g if x < v]
        above = [x for x in g if x > v]
        if below:
            mids.append((v + below[-1]) / 2.0)
        if above:
            mids.append((v + above[0]) / 2.0)
        best = sweep_param(name, mids, best)
        trace.append(best)

    return SearchResult(replace(base, **current), best, trace)
