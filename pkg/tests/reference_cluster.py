"""Brute-force PCA-split clustering oracle.

Same splitting rule as the production code, different machinery: plain
Python lists of member indices, principal axes via SVD instead of an
eigendecomposition of the scatter matrix, explicit loops.
"""

import numpy as np


def _axis_svd(centered):
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    axis = vt[0]
    pivot = int(np.argmax(np.abs(axis)))
    if axis[pivot] < 0.0:
        axis = -axis
    return axis


def _tsd(points):
    mean = points.mean(axis=0)
    return float(sum(float(np.dot(p - mean, p - mean)) for p in points))


def pca_tree_reference(features, k):
    feats = np.asarray(features, dtype=np.float64)
    leaves = [list(range(feats.shape[0]))]
    retired = set()
    while len(leaves) < k:
        best, best_dev = -1, 0.0
        for i, members in enumerate(leaves):
            if i in retired:
                continue
            dev = _tsd(feats[members])
            if dev > best_dev:
                best, best_dev = i, dev
        if best < 0:
            break
        members = np.array(leaves[best])
        sub = feats[members]
        centered = sub - sub.mean(axis=0)
        proj = centered @ _axis_svd(centered)
        cut = proj.mean()
        left = [int(m) for m, pr in zip(members, proj) if pr < cut]
        right = [int(m) for m, pr in zip(members, proj) if pr >= cut]
        if not left or not right:
            retired.add(best)
            continue
        leaves[best] = left
        leaves.append(right)
    ids = np.empty(feats.shape[0], dtype=np.int32)
    for cid, members in enumerate(leaves):
        ids[members] = cid
    return ids, len(leaves)
