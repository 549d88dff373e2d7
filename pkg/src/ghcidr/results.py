"""Reduction outcome record shared by the three algorithms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import SubsetSpec
from .exceptions import DataConsistencyError

ALGORITHMS = ("rhc", "ghcidr", "merged-ghcidr")


@dataclass
class ReductionResult:
    """What a reduction run produced.

    Subset algorithms carry a :class:`SubsetSpec` (``synthetic=False``); the
    centroid baseline carries synthetic feature rows instead and is flagged
    ``synthetic=True`` because its points are aggregates, not dataset rows.
    """

    algorithm: str
    params: dict
    original_count: int
    reduction_rate: float
    synthetic: bool
    subset: SubsetSpec | None = None
    synthetic_features: np.ndarray | None = None
    synthetic_labels: np.ndarray | None = None
    source: str | None = None
    per_cluster_counts: tuple | None = None
    wall_time: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise DataConsistencyError(
                f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}"
            )
        if self.original_count < 1:
            raise DataConsistencyError("original_count must be positive")
        if self.synthetic:
            if self.synthetic_features is None or self.synthetic_labels is None:
                raise DataConsistencyError("synthetic result needs points and labels")
            if self.subset is not None:
                raise DataConsistencyError("synthetic result cannot carry a subset")
            if len(self.synthetic_features) != len(self.synthetic_labels):
                raise DataConsistencyError("synthetic points and labels disagree")
        else:
            if self.subset is None:
                raise DataConsistencyError("subset result needs a SubsetSpec")
            self.subset.validate_against(self.original_count)
        expected = 100.0 * (1.0 - self.reduced_count / self.original_count)
        if not (0.0 <= self.reduction_rate < 100.0):
            raise DataConsistencyError(
                f"reduction_rate {self.reduction_rate} outside [0, 100)"
            )
        if abs(self.reduction_rate - expected) > 1e-9:
            raise DataConsistencyError(
                f"reduction_rate {self.reduction_rate} inconsistent with counts "
                f"({self.reduced_count}/{self.original_count})"
            )

    @property
    def reduced_count(self) -> int:
        if self.synthetic:
            return len(self.synthetic_features)
        return len(self.subset)

    def reduced_set(self, ds):
        """The reduced training set as (features, labels) arrays."""
        if self.synthetic:
            return self.synthetic_features, self.synthetic_labels
        idx = self.subset.indices
        return ds.features[idx], ds.labels[idx]
