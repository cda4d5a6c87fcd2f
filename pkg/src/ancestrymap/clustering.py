"""Ward clustering of eigenmap coordinates and nearest-base assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ArgumentError


@dataclass(frozen=True)
class ClusterLabels:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ArgumentError("cluster labels out of range")
        if np.unique(labels).size != self.k:
            raise ArgumentError("every cluster label must be used")
        object.__setattr__(self, "labels", labels)

    def members(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)


def ward_linkage(coords) -> np.ndarray:
    """Full Ward merge sequence on squared Euclidean distances.

    Each row is ``(a, b, distance, size)``.  A cluster is identified by its
    smallest member index, so ``a < b`` and the merged cluster keeps id
    ``a``.  At every step the minimum-distance pair is merged, ties going
    to the lexicographically smallest ``(a, b)``.  Distances follow the
    Lance-Williams recurrence started from squared distances.
    """
    x = np.asarray(coords, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    return kernels.ward_linkage(x)


def labels_from_merges(merges: np.ndarray, n: int, k: int) -> np.ndarray:
    """Cut a merge sequence at ``k`` clusters; labels follow smallest member."""
    parent = np.arange(n)
    for a, b in merges[: n - k, :2].astype(np.int64):
        parent[parent == b] = a
    roots, labels = np.unique(parent, return_inverse=True)
    # roots are smallest member indices, already sorted ascending
    return labels.astype(np.int64)


def ward_cluster(coords, k: int) -> ClusterLabels:
    """Ward clustering cut at ``k`` groups.

    Labels are numbered by each group's smallest member index.
    """
    x = np.asarray(coords, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ArgumentError(f"need 1 <= k <= {n}, got k={k}")
    if k == n:
        return ClusterLabels(np.arange(n), n)
    merges = ward_linkage(x)
    return ClusterLabels(labels_from_merges(merges, n, k), k)


def choose_k(d: int) -> int:
    """Number of Ward groups for a map with ``d`` significant dimensions."""
    if d < 0:
        raise ArgumentError("significant dimension count must be non-negative")
    return d + 1


def assign_nearest(projected, base_coords, base_labels: ClusterLabels) -> np.ndarray:
    """Label of the Euclidean-nearest base subject (lowest index on ties)."""
    p = np.asarray(projected, dtype=np.float64)
    b = np.asarray(base_coords, dtype=np.float64)
    if p.ndim == 1:
        p = p[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if b.shape[0] == 0:
        raise ArgumentError("cannot assign against an empty base")
    if p.shape[1] != b.shape[1]:
        raise ArgumentError(f"coordinate widths differ: {p.shape[1]} vs {b.shape[1]}")
    if p.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    return base_labels.labels[kernels.nearest_index(p, b)]
