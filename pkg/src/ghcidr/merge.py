"""Per-class complete-linkage merging and the merged reduction pipeline.

Inter-cluster distance is the maximum pairwise member distance. Within each
class the pair at minimum distance is merged repeatedly until the class is
down to ``max(1, floor(beta * cluster_count))`` clusters; after a merge the
remaining distances update exactly via ``D(A|B, C) = max(D(A,C), D(B,C))``.
Ties on the minimum resolve to the lexicographically smallest id pair, ids
being assigned in partition order, so the dendrogram is deterministic.

Because the greedy merge sequence does not depend on where it stops, the
per-class sequence is computed once and replayed at different depths when
calibrating beta against a target reduction rate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .annulus import _check_alpha, select_indices
from .datasets import SubsetSpec
from .evaluation import reduction_rate
from .exceptions import CalibrationError, DataConsistencyError
from .kmeans import pairwise_distances
from .results import ReductionResult
from .rhc import HomogeneousCluster, Partition

_CHUNK_ELEMENTS = 25_000_000


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not (0.0 < beta <= 1.0) or math.isnan(beta):
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    return beta


def complete_linkage_distance(ds, a: HomogeneousCluster, b: HomogeneousCluster) -> float:
    """Maximum pairwise Euclidean distance between two clusters' members."""
    return float(
        pairwise_distances(ds.features[a.members], ds.features[b.members]).max()
    )


def _class_linkage_matrix(ds, clusters) -> np.ndarray:
    """Initial complete-linkage matrix for one class's clusters."""
    sizes = [c.size for c in clusters]
    index = np.concatenate([c.members for c in clusters])
    points = ds.features[index]
    starts = np.zeros(len(clusters), dtype=np.int64)
    np.cumsum(sizes[:-1], out=starts[1:])
    m = points.shape[0]
    chunk_rows = max(1, _CHUNK_ELEMENTS // max(m, 1))

    k = len(clusters)
    linkage = np.empty((k, k), dtype=np.float64)
    i = 0
    while i < k:
        j = i
        rows = 0
        while j < k and (rows == 0 or rows + sizes[j] <= chunk_rows):
            rows += sizes[j]
            j += 1
        block = pairwise_distances(points[starts[i]:starts[i] + rows], points)
        per_cluster_cols = np.maximum.reduceat(block, starts, axis=1)
        linkage[i:j] = np.maximum.reduceat(
            per_cluster_cols, starts[i:j] - starts[i], axis=0
        )
        i = j
    np.fill_diagonal(linkage, 0.0)
    # The two triangles come from different row chunks; take the elementwise
    # max so the matrix is exactly symmetric.
    return np.maximum(linkage, linkage.T)


def _merge_steps(linkage: np.ndarray, stop_count: int) -> list:
    """Greedy merge sequence (a, b) pairs, b absorbed into a, until stop_count."""
    work = np.array(linkage, dtype=np.float64, copy=True)
    k = work.shape[0]
    np.fill_diagonal(work, np.inf)
    steps = []
    active = k
    while active > stop_count:
        # Row-major argmin lands on the lexicographically smallest (a, b)
        # pair among tied minima, with a < b.
        flat = int(np.argmin(work))
        a, b = divmod(flat, k)
        merged = np.maximum(work[a], work[b])
        work[a, :] = merged
        work[:, a] = merged
        work[b, :] = np.inf
        work[:, b] = np.inf
        steps.append((a, b))
        active -= 1
    return steps


def _replay(ds, clusters, steps, n_merges: int):
    """Apply the first ``n_merges`` dendrogram steps to fresh member lists."""
    members = [c.members for c in clusters]
    alive = [True] * len(clusters)
    for a, b in steps[:n_merges]:
        members[a] = np.sort(np.concatenate([members[a], members[b]]))
        alive[b] = False
    return [
        HomogeneousCluster.from_members(ds, members[i])
        for i in range(len(clusters))
        if alive[i]
    ]


def merge_target(beta: float, cluster_count: int) -> int:
    """Per-class surviving cluster count: max(1, floor(beta * count))."""
    return max(1, math.floor(beta * cluster_count))


@dataclass(frozen=True)
class MergePlan:
    """One class's dendrogram: its clusters and the full greedy merge order.

    The greedy sequence does not depend on where it stops, so one plan can
    be replayed to any beta-determined count; that is what makes repeated
    beta probes during calibration cheap.
    """

    label: int
    clusters: tuple
    steps: tuple

    def target_count(self, beta: float) -> int:
        return merge_target(beta, len(self.clusters))

    def merged(self, ds, beta: float):
        """Clusters surviving at this beta."""
        n_merges = len(self.clusters) - self.target_count(beta)
        if n_merges <= 0:
            return list(self.clusters)
        return _replay(ds, self.clusters, list(self.steps), n_merges)


def build_merge_plans(ds, partition) -> list:
    """Compute every class's full dendrogram once, in label order."""
    groups = _group_by_label(partition)
    plans = []
    for label in sorted(groups):
        clusters = groups[label]
        steps = (
            _merge_steps(_class_linkage_matrix(ds, clusters), 1)
            if len(clusters) > 1
            else []
        )
        plans.append(
            MergePlan(label=label, clusters=tuple(clusters), steps=tuple(steps))
        )
    return plans


def merge_class(ds, clusters, beta: float):
    """Agglomerate one class's clusters down to the beta-determined count."""
    beta = _check_beta(beta)
    clusters = list(clusters)
    if not clusters:
        raise DataConsistencyError("merge_class needs at least one cluster")
    if len({c.label for c in clusters}) != 1:
        raise DataConsistencyError("merge_class requires clusters of one label")
    target = merge_target(beta, len(clusters))
    if target >= len(clusters):
        return clusters
    steps = _merge_steps(_class_linkage_matrix(ds, clusters), target)
    return _replay(ds, clusters, steps, len(steps))


def _group_by_label(partition: Partition) -> dict:
    groups = {}
    for cluster in partition.clusters:
        groups.setdefault(cluster.label, []).append(cluster)
    return groups


def merged_partition(ds, partition: Partition, beta: float) -> Partition:
    """Merge every class independently and re-canonicalize the partition."""
    beta = _check_beta(beta)
    groups = _group_by_label(partition)
    merged = []
    for label in sorted(groups):
        merged.extend(merge_class(ds, groups[label], beta))
    merged.sort(key=lambda c: (c.label, int(c.members[0])))
    return Partition(clusters=tuple(merged), n=partition.n)


def merged_ghcidr_reduce(ds, partition: Partition, alpha: float, beta: float,
                         merged: Partition | None = None) -> ReductionResult:
    """Merge clusters per class, then annulus-sample the merged clusters."""
    alpha = _check_alpha(alpha)
    beta = _check_beta(beta)
    timings = {}
    if merged is None:
        t0 = time.perf_counter()
        merged = merged_partition(ds, partition, beta)
        timings["merge"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    indices, per_cluster = select_indices(ds, merged, alpha)
    timings["select"] = time.perf_counter() - t0
    return ReductionResult(
        algorithm="merged-ghcidr",
        params={"alpha": alpha, "beta": beta},
        original_count=ds.n,
        reduction_rate=reduction_rate(ds.n, indices.size),
        synthetic=False,
        subset=SubsetSpec(indices),
        source=ds.source.describe(),
        per_cluster_counts=per_cluster,
        wall_time=timings,
    )


@dataclass(frozen=True)
class CalibrationResult:
    beta: float
    reduction_rate: float
    steps: int
    converged: bool


def calibrate_beta(ds, partition: Partition, alpha: float, target_reduction: float,
                   tol: float = 0.1, max_steps: int = 25) -> CalibrationResult:
    """Bisect beta until the merged reduction rate meets the target.

    The rate is treated as non-decreasing while beta shrinks (fewer, larger
    clusters keep fewer per-cluster base picks); floor-induced jitter is
    absorbed by returning the closest-achieving beta seen. Raises
    :class:`CalibrationError` when the target lies outside the rates
    achievable at the endpoints beta=1 and beta_min=1/#clusters.
    """
    alpha = _check_alpha(alpha)
    target = float(target_reduction)
    if tol < 0:
        raise ValueError(f"tol must be non-negative, got {tol}")
    if max_steps < 1:
        raise ValueError(f"max_steps must be positive, got {max_steps}")

    plans = build_merge_plans(ds, partition)

    def rate_at(beta: float) -> float:
        merged = []
        for plan in plans:
            merged.extend(plan.merged(ds, beta))
        merged.sort(key=lambda c: (c.label, int(c.members[0])))
        indices, _ = select_indices(
            ds, Partition(clusters=tuple(merged), n=partition.n), alpha
        )
        return reduction_rate(ds.n, indices.size)

    beta_min = 1.0 / len(partition.clusters)
    rate_top = rate_at(1.0)
    if abs(rate_top - target) <= tol:
        return CalibrationResult(1.0, rate_top, 0, True)
    rate_bottom = rate_at(beta_min)
    if abs(rate_bottom - target) <= tol:
        return CalibrationResult(beta_min, rate_bottom, 0, True)
    low_rate, high_rate = min(rate_top, rate_bottom), max(rate_top, rate_bottom)
    if target < low_rate or target > high_rate:
        raise CalibrationError(
            f"target rate {target} is outside the achievable range "
            f"[{low_rate:.6f}, {high_rate:.6f}] at alpha={alpha}"
        )

    lo, hi = beta_min, 1.0
    best = min(
        (abs(rate_top - target), 1.0, rate_top),
        (abs(rate_bottom - target), beta_min, rate_bottom),
    )
    steps_used = 0
    for step in range(1, max_steps + 1):
        mid = (lo + hi) / 2.0
        rate = rate_at(mid)
        steps_used = step
        if abs(rate - target) < best[0]:
            best = (abs(rate - target), mid, rate)
        if abs(rate - target) <= tol:
            break
        if rate < target:
            hi = mid  # need more reduction: merge harder with smaller beta
        else:
            lo = mid
    return CalibrationResult(best[1], best[2], steps_used, best[0] <= tol)
