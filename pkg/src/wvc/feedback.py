"""Attention feedback: cluster C2 argmax positions, then reclassify each
cluster on its own coordinate subset."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classify import NNModel, nearest
from .patches import FeatureVector

MAX_ITER = 100
MIN_MEMBERS = 5


@dataclass(frozen=True, eq=False)
class ClusterResult:
    assignments: np.ndarray
    centroids: np.ndarray  # (k, 2)
    inertia: float
    inertia_trace: tuple = ()  # inertia after each Lloyd step


@dataclass(frozen=True)
class ClusterLabel:
    cluster: int
    label: str
    low_confidence: bool
    centroid: tuple[float, float]
    members: tuple[int, ...]
    distance: float

    def to_json(self) -> dict:
        return {
            "cluster": self.cluster,
            "label": self.label,
            "flag": "low_confidence" if self.low_confidence else "ok",
            "centroid_x": self.centroid[0],
            "centroid_y": self.centroid[1],
            "members": list(self.members),
        }


def _sq_dists(points, centroids):
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)


def _kmeanspp(points, k, rng):
    n = len(points)
    centroids = [points[int(rng.integers(n))]]
    for _ in range(1, k):
        d2 = _sq_dists(points, np.array(centroids)).min(axis=1)
        total = d2.sum()
        if total == 0:
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centroids.append(points[idx])
    return np.array(centroids, dtype=np.float64)


def _repair_empty(points, labels, centroids, k):
    for c in range(k):
        if np.any(labels == c):
            continue
        d2 = ((points - centroids[labels]) ** 2).sum(axis=1)
        # only steal from clusters that keep at least one point
        counts = np.bincount(labels, minlength=k)
        d2[counts[labels] < 2] = -1.0
        far = int(np.argmax(d2))
        labels[far] = c
        centroids[c] = points[far]
    return labels


def kmeans_cluster(points, k: int, seed: int = 0) -> ClusterResult:
    """k-means++ seeding then Lloyd iterations until the assignment stops
    changing or ``MAX_ITER`` steps."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(pts) < k:
        raise ValueError(f"cannot form {k} clusters from {len(pts)} points")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(pts, k, rng)
    labels = _repair_empty(pts, np.argmin(_sq_dists(pts, centroids), axis=1), centroids, k)
    trace = []
    for _ in range(MAX_ITER):
        centroids = np.array([pts[labels == c].mean(axis=0) for c in range(k)])
        trace.append(float(((pts - centroids[labels]) ** 2).sum()))
        new = _repair_empty(pts, np.argmin(_sq_dists(pts, centroids), axis=1), centroids, k)
        if np.array_equal(new, labels):
            break
        labels = new
    centroids = np.array([pts[labels == c].mean(axis=0) for c in range(k)])
    inertia = float(((pts - centroids[labels]) ** 2).sum())
    return ClusterResult(labels, centroids, inertia, tuple(trace))


def feedback_classify(model: NNModel, feature: FeatureVector, k: int, seed: int = 0,
                      min_members: int = MIN_MEMBERS) -> list[ClusterLabel]:
    """One label per cluster of argmax positions.

    Features that fit no level carry no position and join no cluster.
    The histogram block, being global, takes no part in reclassification.
    """
    fit_idx = np.flatnonzero(feature.fits)
    clusters = kmeans_cluster(feature.points()[fit_idx], k, seed)
    train = model.embedded_training()[:, : model.train_features.shape[1]]
    query = model.embed(feature.values)
    out = []
    for c in range(k):
        members = fit_idx[clusters.assignments == c]
        row, dist = nearest(train[:, members], query[members])
        out.append(ClusterLabel(
            cluster=c,
            label=model.labels[row],
            low_confidence=len(members) < min_members,
            centroid=(float(clusters.centroids[c, 0]), float(clusters.centroids[c, 1])),
            members=tuple(int(m) for m in members),
            distance=dist,
        ))
    return out
