"""Region and boundary quality measures plus sweep aggregation.

Region measures (covering, rand agreement, information distance) reduce to
one contingency table per prediction/annotation pair.  Boundary quality
matches machine boundary pixels one-to-one against annotator boundary
pixels on the doubled grid, greedily by ascending distance, with distances
measured in original-pixel units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import DimensionMismatch, EmptyGtSet, RaggedSweep
from .raster import LabelMap


# --- contingency machinery --------------------------------------------------

@dataclass
class ContingencyTable:
    """Joint region-size table between a prediction and one annotation."""

    counts: np.ndarray       # (n_pred_regions, n_gt_regions)
    pred_sizes: np.ndarray
    gt_sizes: np.ndarray
    n_pixels: int


def _flat_labels(seg: LabelMap) -> np.ndarray:
    return np.asarray(seg.labels).ravel()


def _check_same_grid(a: LabelMap, b: LabelMap) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch(
            f"grids differ: {a.width}x{a.height} vs {b.width}x{b.height}")


def contingency(pred: LabelMap, gt: LabelMap) -> ContingencyTable:
    """Count pixels falling in every (prediction region, annotation region)."""
    _check_same_grid(pred, gt)
    p = _flat_labels(pred)
    g = _flat_labels(gt)
    _, pi = np.unique(p, return_inverse=True)
    _, gi = np.unique(g, return_inverse=True)
    n_p, n_g = pi.max() + 1, gi.max() + 1
    counts = np.bincount(pi * n_g + gi, minlength=n_p * n_g).reshape(n_p, n_g)
    return ContingencyTable(counts, counts.sum(axis=1), counts.sum(axis=0),
                            p.size)


def covering(pred: LabelMap, gt: LabelMap) -> float:
    """Size-weighted best-overlap score of the annotation by the prediction.

    Each annotated region contributes its best intersection-over-union with
    any predicted region, weighted by its pixel count.
    """
    t = contingency(pred, gt)
    inter = t.counts.astype(np.float64)
    union = (t.pred_sizes[:, None] + t.gt_sizes[None, :]) - inter
    iou = np.where(inter > 0, inter / union, 0.0)
    best = iou.max(axis=0)
    return float(np.sum(t.gt_sizes * best) / t.n_pixels)


def _rand_index(t: ContingencyTable) -> float:
    def pairs2(x):
        x = x.astype(np.float64)
        return float(np.sum(x * (x - 1) / 2.0))

    total = t.n_pixels * (t.n_pixels - 1) / 2.0
    if total == 0:
        return 1.0
    joint = pairs2(t.counts.ravel())
    same_pred = pairs2(t.pred_sizes)
    same_gt = pairs2(t.gt_sizes)
    agree = total - same_pred - same_gt + 2.0 * joint
    return float(agree / total)


def pri(pred: LabelMap, gts: list[LabelMap]) -> float:
    """Mean pairwise-agreement fraction against a set of annotations."""
    if not gts:
        raise EmptyGtSet("probabilistic rand needs at least one annotation")
    return float(np.mean([_rand_index(contingency(pred, gt)) for gt in gts]))


def voi(pred: LabelMap, gt: LabelMap) -> float:
    """Variation of information between two partitions, in bits."""
    t = contingency(pred, gt)
    n = float(t.n_pixels)

    def entropy(sizes):
        p = sizes[sizes > 0].astype(np.float64) / n
        return float(-np.sum(p * np.log2(p)))

    joint = t.counts[t.counts > 0].astype(np.float64) / n
    h_joint = float(-np.sum(joint * np.log2(joint)))
    h_pred = entropy(t.pred_sizes)
    h_gt = entropy(t.gt_sizes)
    mutual = h_pred + h_gt - h_joint
    return h_pred + h_gt - 2.0 * mutual


# --- boundary matching ------------------------------------------------------

def _greedy_match(a_pts: np.ndarray, b_pts: np.ndarray, tol: float) -> int:
    """One-to-one matches between two point sets within distance `tol`.

    Candidate pairs are taken in ascending (distance, a index, b index)
    order; a longer tolerance only appends candidates, so the match count
    is monotone in `tol`.  Coordinates are doubled-grid indices; distances
    are halved into original-pixel units.
    """
    if a_pts.size == 0 or b_pts.size == 0:
        return 0
    tree = cKDTree(b_pts * 0.5)
    cand: list[tuple[float, int, int]] = []
    for ia, hits in enumerate(tree.query_ball_point(a_pts * 0.5, tol)):
        half = a_pts[ia] * 0.5
        for ib in hits:
            d = float(np.hypot(*(half - b_pts[ib] * 0.5)))
            cand.append((d, ia, ib))
    cand.sort()
    a_used = np.zeros(a_pts.shape[0], dtype=bool)
    b_used = np.zeros(b_pts.shape[0], dtype=bool)
    matched = 0
    for _, ia, ib in cand:
        if not a_used[ia] and not b_used[ib]:
            a_used[ia] = True
            b_used[ib] = True
            matched += 1
    return matched


def boundary_f(machine: np.ndarray, annotations: list[np.ndarray],
               tol: float) -> tuple[float, float, float]:
    """Boundary precision, recall and F against several annotators.

    Precision matches machine pixels against the union of all annotators;
    recall matches each annotator separately and averages.  An empty
    machine boundary has precision 1 by convention; F is 0 when P + R = 0.
    """
    if not annotations:
        raise EmptyGtSet("boundary quality needs at least one annotation")
    machine = np.asarray(machine, dtype=bool)
    for ann in annotations:
        if np.asarray(ann).shape != machine.shape:
            raise DimensionMismatch("annotation grids differ from machine grid")
    m_pts = np.argwhere(machine).astype(np.float64)
    union = np.zeros_like(machine)
    for ann in annotations:
        union |= np.asarray(ann, dtype=bool)
    u_pts = np.argwhere(union).astype(np.float64)

    if m_pts.shape[0] == 0:
        precision = 1.0
    else:
        precision = _greedy_match(m_pts, u_pts, tol) / m_pts.shape[0]

    recalls = []
    for ann in annotations:
        a_pts = np.argwhere(np.asarray(ann, dtype=bool)).astype(np.float64)
        if a_pts.shape[0] == 0:
            recalls.append(1.0)
            continue
        recalls.append(_greedy_match(a_pts, m_pts, tol) / a_pts.shape[0])
    recall = float(np.mean(recalls))

    if precision + recall == 0.0:
        f = 0.0
    else:
        f = 2.0 * precision * recall / (precision + recall)
    return float(precision), recall, f


def default_tolerance(width: int, height: int) -> float:
    """Matching tolerance: 0.0075 of the image diagonal, in pixels."""
    return 0.0075 * float(np.hypot(width, height))


# --- semantic overlap -------------------------------------------------------

def mean_iou(pred_ids: np.ndarray, gt_ids: np.ndarray, n_categories: int) -> float:
    """Mean intersection-over-union (percent) over categories present anywhere."""
    pred = np.asarray(pred_ids).ravel()
    gt = np.asarray(gt_ids).ravel()
    if pred.shape != gt.shape:
        raise DimensionMismatch("category maps differ in size")
    scores = []
    for cat in range(n_categories):
        p = pred == cat
        g = gt == cat
        union = np.logical_or(p, g).sum()
        if union == 0:
            continue
        scores.append(np.logical_and(p, g).sum() / union)
    if not scores:
        raise EmptyGtSet("no category present in either map")
    return float(np.mean(scores) * 100.0)


# --- sweeps -----------------------------------------------------------------

@dataclass
class ScoreSweep:
    """Per-image scores over one shared, strictly increasing threshold grid."""

    thresholds: np.ndarray          # (n_thresholds,)
    scores: np.ndarray              # (n_images, n_thresholds)

    def __post_init__(self):
        self.thresholds = np.asarray(self.thresholds, dtype=np.float64)
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2 or self.scores.shape[1] != self.thresholds.size:
            raise RaggedSweep(
                f"scores {self.scores.shape} do not match "
                f"{self.thresholds.size} thresholds")
        if np.any(np.diff(self.thresholds) <= 0):
            raise RaggedSweep("thresholds must strictly increase")


def ods_ois(sweep: ScoreSweep, better: str = "max") -> tuple[float, float, float]:
    """Best-shared-threshold and best-per-image aggregate scores.

    Returns (dataset_optimum, its threshold, image_optimum mean).  Ties on
    the dataset optimum pick the lowest threshold.
    """
    if better not in ("max", "min"):
        raise ValueError(f"better must be 'max' or 'min', got {better!r}")
    sign = 1.0 if better == "max" else -1.0
    means = sweep.scores.mean(axis=0)
    best_idx = int(np.argmax(sign * means))
    dataset_best = float(means[best_idx])
    per_image = (sign * sweep.scores).max(axis=1) * sign
    return dataset_best, float(sweep.thresholds[best_idx]), float(per_image.mean())
