"""Recursive homogeneous clustering and the centroid baseline reduction.

A worklist starts with the whole index range as one cluster. Label-pure
clusters are emitted; mixed clusters are split by k-means seeded at the
per-class means of the points in scope, and the non-empty sub-clusters go
back on the queue. Two degenerate guards keep the recursion total: a mixed
cluster whose rows are all identical is split directly by label (k-means
cannot separate coincident points), and a split that returns a single group
falls back to the same label split.
"""

from __future__ import annotations

import time
from collections import Counter, deque
from dataclasses import dataclass

import numpy as np

from .evaluation import reduction_rate
from .exceptions import DataConsistencyError
from .kmeans import class_means, kmeans
from .results import ReductionResult

#: Cluster-size bands used by the stats report.
SIZE_BANDS = ((1, 5), (6, 10), (11, 20), (21, None))


@dataclass(frozen=True)
class HomogeneousCluster:
    """A set of dataset indices that all share one label, plus their mean."""

    members: np.ndarray
    label: int
    centroid: np.ndarray

    def __post_init__(self):
        members = np.array(self.members, dtype=np.int64, copy=True)
        centroid = np.array(self.centroid, dtype=np.float64, copy=True)
        if members.ndim != 1 or members.size == 0:
            raise DataConsistencyError("cluster members must be a non-empty 1-D list")
        if members.size > 1 and not (np.diff(members) > 0).all():
            raise DataConsistencyError("cluster members must be sorted and unique")
        if not np.isfinite(centroid).all():
            raise DataConsistencyError("cluster centroid contains non-finite values")
        members.flags.writeable = False
        centroid.flags.writeable = False
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "centroid", centroid)
        object.__setattr__(self, "label", int(self.label))

    @property
    def size(self) -> int:
        return int(self.members.size)

    @classmethod
    def from_members(cls, ds, members):
        """Build a cluster from dataset indices, checking label purity."""
        members = np.sort(np.asarray(members, dtype=np.int64))
        labels = ds.labels[members]
        if not (labels == labels[0]).all():
            raise DataConsistencyError("cluster members carry more than one label")
        return cls(
            members=members,
            label=int(labels[0]),
            centroid=ds.features[members].mean(axis=0),
        )


@dataclass(frozen=True)
class Partition:
    """Homogeneous clusters whose members disjointly cover [0, n)."""

    clusters: tuple
    n: int

    def __post_init__(self):
        if not self.clusters:
            raise DataConsistencyError("partition must contain at least one cluster")
        all_members = np.concatenate([c.members for c in self.clusters])
        if all_members.size != self.n or not np.array_equal(
            np.sort(all_members), np.arange(self.n)
        ):
            raise DataConsistencyError(
                "clusters do not form a disjoint cover of the dataset"
            )
        object.__setattr__(self, "clusters", tuple(self.clusters))
        object.__setattr__(self, "n", int(self.n))

    def size_histogram(self) -> dict:
        return dict(sorted(Counter(c.size for c in self.clusters).items()))

    def member_owner(self) -> np.ndarray:
        """Cluster index (partition order) owning each dataset row."""
        owner = np.empty(self.n, dtype=np.int64)
        for idx, cluster in enumerate(self.clusters):
            owner[cluster.members] = idx
        return owner


def _label_split(ds, scope, scoped_labels):
    return [
        HomogeneousCluster.from_members(ds, scope[scoped_labels == label])
        for label in np.unique(scoped_labels)
    ]


def rhc_partition(ds, max_iter: int = 100, tol: float = 1e-6) -> Partition:
    """Partition the dataset into label-pure clusters by recursive k-means."""
    queue = deque([np.arange(ds.n, dtype=np.int64)])
    out = []
    while queue:
        scope = queue.popleft()
        scoped_labels = ds.labels[scope]
        if (scoped_labels == scoped_labels[0]).all():
            out.append(HomogeneousCluster.from_members(ds, scope))
            continue
        init = class_means(ds, scope)
        # Identical rows imply coincident class means, so the cheap mean
        # comparison gates the full feature scan.
        if (init.centroids == init.centroids[0]).all() and (
            ds.features[scope] == ds.features[scope[0]]
        ).all():
            out.extend(_label_split(ds, scope, scoped_labels))
            continue
        owners, centroids = kmeans(ds, scope, init, max_iter=max_iter, tol=tol)
        groups = [scope[owners == j] for j in range(centroids.k)]
        groups = [g for g in groups if g.size]
        if len(groups) <= 1:
            out.extend(_label_split(ds, scope, scoped_labels))
            continue
        queue.extend(groups)
    out.sort(key=lambda c: (c.label, int(c.members[0])))
    return Partition(clusters=tuple(out), n=ds.n)


def rhc_reduce(ds, partition: Partition | None = None, max_iter: int = 100,
               tol: float = 1e-6) -> ReductionResult:
    """Centroid baseline: one synthetic mean point per homogeneous cluster."""
    timings = {}
    if partition is None:
        t0 = time.perf_counter()
        partition = rhc_partition(ds, max_iter=max_iter, tol=tol)
        timings["partition"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    points = np.vstack([c.centroid for c in partition.clusters])
    labels = np.array([c.label for c in partition.clusters], dtype=np.int64)
    timings["centroids"] = time.perf_counter() - t0
    return ReductionResult(
        algorithm="rhc",
        params={},
        original_count=ds.n,
        reduction_rate=reduction_rate(ds.n, len(partition.clusters)),
        synthetic=True,
        synthetic_features=points,
        synthetic_labels=labels,
        source=ds.source.describe(),
        wall_time=timings,
    )


def partition_stats(partition: Partition) -> dict:
    """Cluster-size histogram plus per-band cluster and image totals."""
    histogram = partition.size_histogram()
    bands = []
    for low, high in SIZE_BANDS:
        sizes = [
            (size, count)
            for size, count in histogram.items()
            if size >= low and (high is None or size <= high)
        ]
        bands.append(
            {
                "min_size": low,
                "max_size": high,
                "clusters": sum(count for _, count in sizes),
                "points": sum(size * count for size, count in sizes),
            }
        )
    return {
        "n": partition.n,
        "n_clusters": len(partition.clusters),
        "histogram": histogram,
        "bands": bands,
    }


def partition_to_json(partition: Partition) -> list:
    """JSON-ready form: a list of {label, members} objects."""
    return [
        {"label": int(c.label), "members": [int(i) for i in c.members]}
        for c in partition.clusters
    ]


def partition_from_json(obj, ds) -> Partition:
    """Rebuild a partition, re-deriving centroids and checking it against ds."""
    if not isinstance(obj, list):
        raise DataConsistencyError("partition document must be a JSON list")
    clusters = []
    for entry in obj:
        try:
            members = entry["members"]
            label = int(entry["label"])
        except (KeyError, TypeError) as exc:
            raise DataConsistencyError(
                f"malformed partition document entry: {exc}"
            ) from None
        cluster = HomogeneousCluster.from_members(ds, members)
        if cluster.label != label:
            raise DataConsistencyError(
                f"cached cluster label {label} does not match dataset "
                f"label {cluster.label}"
            )
        clusters.append(cluster)
    return Partition(clusters=tuple(clusters), n=ds.n)
