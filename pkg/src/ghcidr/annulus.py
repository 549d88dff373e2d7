"""Annulus-based sampling of representative points from homogeneous clusters.

Each cluster is treated as a ball around its centroid. The ball is cut into
``floor((1 - alpha) * size)`` concentric bands of equal thickness

    gamma = max_dist / ((1 - alpha) * size)

and the selection keeps the member nearest the centroid plus, per band, the
member whose centroid distance is closest to the band midpoint. Band
membership is half-open [R1, R2) with the outermost band closed at R2; when
the band count floors below (1 - alpha) * size, members beyond the last
band boundary contribute nothing. All ties resolve to the lowest dataset
index, so a selection is reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .datasets import SubsetSpec
from .evaluation import reduction_rate
from .kmeans import distances_to_point
from .results import ReductionResult


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 <= alpha <= 1.0) or math.isnan(alpha):
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


@dataclass(frozen=True)
class AnnulusPlan:
    """Band layout for one cluster: thickness, count, and radius bounds."""

    max_dist: float
    alpha: float
    gamma: float
    n_annuli: int
    bounds: tuple

    def edges(self) -> np.ndarray:
        """Band boundaries [0, gamma, 2*gamma, ..., n*gamma]."""
        if self.n_annuli == 0:
            return np.zeros(1)
        return np.array(
            [self.bounds[0][0]] + [b[1] for b in self.bounds], dtype=np.float64
        )


def plan_annuli(cluster_size: int, max_dist: float, alpha: float) -> AnnulusPlan:
    """Compute the annulus layout for a cluster.

    A plan with zero annuli (alpha = 1, tiny clusters, or a zero-radius
    cluster) means only the centroid-nearest member gets sampled.
    """
    alpha = _check_alpha(alpha)
    if cluster_size < 1:
        raise ValueError(f"cluster_size must be positive, got {cluster_size}")
    max_dist = float(max_dist)
    if max_dist < 0 or math.isnan(max_dist):
        raise ValueError(f"max_dist must be non-negative, got {max_dist}")

    weight = (1.0 - alpha) * cluster_size
    n_annuli = int(math.floor(weight))
    if weight == 0.0 or max_dist == 0.0:
        return AnnulusPlan(
            max_dist=max_dist, alpha=alpha, gamma=math.inf, n_annuli=0, bounds=()
        )
    gamma = max_dist / weight
    bounds = tuple((i * gamma, (i + 1) * gamma) for i in range(n_annuli))
    return AnnulusPlan(
        max_dist=max_dist, alpha=alpha, gamma=gamma, n_annuli=n_annuli, bounds=bounds
    )


def select_from_cluster(ds, cluster, alpha: float) -> np.ndarray:
    """Pick the representative member indices of one cluster.

    Returns a sorted, duplicate-free array of dataset indices; never empty
    because the centroid-nearest member is always kept.
    """
    alpha = _check_alpha(alpha)
    members = cluster.members
    dist = distances_to_point(ds.features[members], cluster.centroid)
    chosen = {int(members[np.argmin(dist)])}

    plan = plan_annuli(members.size, float(dist.max()), alpha)
    if plan.n_annuli:
        edges = plan.edges()
        band = np.searchsorted(edges, dist, side="right") - 1
        # The outermost band is closed at its upper bound. A 1e-9 relative
        # slack absorbs rounding of n*gamma against max_dist, so the
        # farthest member is never dropped when the bands reach it; members
        # genuinely beyond the last bound stay outside every band.
        at_edge = (band >= plan.n_annuli) & (dist <= edges[-1] * (1.0 + 1e-9))
        band[at_edge] = plan.n_annuli - 1
        in_band = band < plan.n_annuli
        if in_band.any():
            band_in = band[in_band]
            dist_in = dist[in_band]
            member_in = members[in_band]
            mids = (edges[band_in] + edges[band_in + 1]) / 2.0
            offset = np.abs(dist_in - mids)
            # Winner per band = smallest (offset, dataset index).
            order = np.lexsort((member_in, offset, band_in))
            band_sorted = band_in[order]
            first = np.ones(order.size, dtype=bool)
            first[1:] = band_sorted[1:] != band_sorted[:-1]
            chosen.update(int(i) for i in member_in[order[first]])
    return np.array(sorted(chosen), dtype=np.int64)


def select_indices(ds, partition, alpha: float):
    """Union of per-cluster selections; also returns per-cluster pick counts."""
    picks = []
    per_cluster = []
    for cluster in partition.clusters:
        selected = select_from_cluster(ds, cluster, alpha)
        picks.append(selected)
        per_cluster.append(int(selected.size))
    return np.sort(np.concatenate(picks)), tuple(per_cluster)


def ghcidr_reduce(ds, partition, alpha: float) -> ReductionResult:
    """Annulus-sample every cluster and assemble the exact-subset result."""
    t0 = time.perf_counter()
    indices, per_cluster = select_indices(ds, partition, alpha)
    elapsed = time.perf_counter() - t0
    return ReductionResult(
        algorithm="ghcidr",
        params={"alpha": float(alpha)},
        original_count=ds.n,
        reduction_rate=reduction_rate(ds.n, indices.size),
        synthetic=False,
        subset=SubsetSpec(indices),
        source=ds.source.describe(),
        per_cluster_counts=per_cluster,
        wall_time={"select": elapsed},
    )
