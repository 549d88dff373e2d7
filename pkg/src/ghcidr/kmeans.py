"""Euclidean primitives and the deterministic Lloyd loop used for splitting.

The k-means here is intentionally plain: centroids are seeded at per-class
means by the caller, nearest-centroid ties resolve to the lowest centroid
index, and an emptied centroid is re-seeded to the in-scope point farthest
from its nearest surviving centroid. Those rules make the whole reduction
pipeline reproducible without any RNG.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataConsistencyError


def euclidean_distance(a, b) -> float:
    """Euclidean distance between two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DataConsistencyError(
            f"dimension mismatch: {a.shape} vs {b.shape}"
        )
    diff = a - b
    return float(np.sqrt(np.dot(diff, diff)))


def distances_to_point(points: np.ndarray, point: np.ndarray) -> np.ndarray:
    """Distance from every row of ``points`` to ``point``."""
    diff = points - point
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def pairwise_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense |a| x |b| Euclidean distance matrix."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d2 = (
        np.einsum("ij,ij->i", a, a)[:, None]
        - 2.0 * (a @ b.T)
        + np.einsum("ij,ij->i", b, b)[None, :]
    )
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2, out=d2)


@dataclass(frozen=True)
class CentroidSet:
    """k mean vectors plus the class id whose class-mean seeded each slot."""

    centroids: np.ndarray
    seed_labels: np.ndarray

    def __post_init__(self):
        centroids = np.array(self.centroids, dtype=np.float64, copy=True)
        seed_labels = np.array(self.seed_labels, dtype=np.int64, copy=True)
        if centroids.ndim != 2 or centroids.shape[0] < 1:
            raise DataConsistencyError("centroids must be a non-empty 2-D matrix")
        if not np.isfinite(centroids).all():
            raise DataConsistencyError("centroids contain non-finite values")
        if seed_labels.shape != (centroids.shape[0],):
            raise DataConsistencyError("seed_labels length must equal k")
        if np.unique(seed_labels).size != seed_labels.size:
            raise DataConsistencyError("seed_labels must be pairwise distinct")
        centroids.flags.writeable = False
        seed_labels.flags.writeable = False
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "seed_labels", seed_labels)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def class_means(ds, scope) -> CentroidSet:
    """One centroid per distinct label in scope, at that label's mean."""
    scope = np.asarray(scope, dtype=np.int64)
    if scope.size == 0:
        raise DataConsistencyError("scope must be non-empty")
    scoped_labels = ds.labels[scope]
    uniq = np.unique(scoped_labels)
    means = np.empty((uniq.size, ds.d), dtype=np.float64)
    for row, label in enumerate(uniq):
        means[row] = ds.features[scope[scoped_labels == label]].mean(axis=0)
    return CentroidSet(centroids=means, seed_labels=uniq)


def _dist_sq(X, x2, C):
    # Squared distances via the Gram expansion; tiny negatives are harmless
    # for argmin/argmax decisions.
    return x2[:, None] - 2.0 * (X @ C.T) + np.einsum("ij,ij->i", C, C)[None, :]


def _reseed_empty(X, x2, C, d2, owners, counts):
    """Move the point farthest from any surviving centroid into each empty slot."""
    k = C.shape[0]
    used = []
    for _ in range(k):
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return
        j = int(empty[0])
        nearest = d2[:, counts > 0].min(axis=1)
        if used:
            nearest[used] = -np.inf
        p = int(np.argmax(nearest))  # ties resolve to the lowest point index
        counts[owners[p]] -= 1
        owners[p] = j
        counts[j] = 1
        C[j] = X[p]
        d2[:, j] = x2 - 2.0 * (X @ C[j]) + np.dot(C[j], C[j])
        used.append(p)


def kmeans(ds, scope, init: CentroidSet, max_iter: int = 100, tol: float = 1e-6):
    """Lloyd iterations over ``scope`` rows of the dataset.

    Stops when the assignment is unchanged, when the largest centroid
    displacement is <= tol, or after max_iter rounds. Returns the final
    assignment (one owner slot per scope entry) and a CentroidSet whose
    centroids are the exact member means of the final assignment; every
    returned centroid owns at least one point.
    """
    scope = np.asarray(scope, dtype=np.int64)
    k = init.k
    if k > scope.size:
        raise DataConsistencyError(f"k={k} exceeds scope size {scope.size}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be positive, got {max_iter}")
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")

    if scope.size == ds.n and np.array_equal(scope, np.arange(ds.n)):
        X = ds.features  # read-only view; skip the full-range copy
    else:
        X = ds.features[scope]
    x2 = np.einsum("ij,ij->i", X, X)
    C = np.array(init.centroids, dtype=np.float64, copy=True)
    owners = None
    for _ in range(max_iter):
        d2 = _dist_sq(X, x2, C)
        new_owners = np.argmin(d2, axis=1)  # first minimum = lowest index
        counts = np.bincount(new_owners, minlength=k)
        if (counts == 0).any():
            _reseed_empty(X, x2, C, d2, new_owners, counts)
        if owners is not None and np.array_equal(new_owners, owners):
            owners = new_owners
            break
        owners = new_owners
        new_C = np.empty_like(C)
        for j in range(k):
            members = X[owners == j]
            new_C[j] = members.mean(axis=0) if members.shape[0] else C[j]
        shift_sq = ((new_C - C) ** 2).sum(axis=1).max()
        C = new_C
        if shift_sq <= tol * tol:
            break

    counts = np.bincount(owners, minlength=k)
    keep = np.flatnonzero(counts > 0)
    remap = np.full(k, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    final_owners = remap[owners]
    means = np.vstack([X[owners == j].mean(axis=0) for j in keep])
    return final_owners, CentroidSet(centroids=means, seed_labels=init.seed_labels[keep])
