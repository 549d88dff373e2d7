"""scikit-learn style wrappers around the reduction pipeline.

These estimators let the algorithms compose with the wider ecosystem
(``get_params``/``set_params``, ``clone``, fit attributes with trailing
underscores). Features must already be scaled into [0, 1]; pixel data is
typically divided by 255 first. Labels may be arbitrary hashable values and
are encoded internally, with the sorted originals exposed as ``classes_``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted, check_X_y, check_array

from .annulus import ghcidr_reduce
from .datasets import LabeledDataset
from .evaluation import knn_predict
from .merge import merged_ghcidr_reduce
from .rhc import rhc_partition, rhc_reduce


def _as_dataset(X, y):
    X, y = check_X_y(X, y, dtype=np.float64)
    if X.min() < 0.0 or X.max() > 1.0:
        raise ValueError(
            "features must lie in [0, 1]; rescale first (for pixel data, "
            "divide by 255)"
        )
    classes, encoded = np.unique(y, return_inverse=True)
    ds = LabeledDataset.from_arrays(X, encoded, num_classes=classes.size)
    return ds, classes


class RHCPartitioner(BaseEstimator):
    """Recursively split (X, y) with k-means until every cluster is label-pure.

    Parameters
    ----------
    max_iter : int, default=100
        Lloyd iteration cap per split.
    tol : float, default=1e-6
        Convergence threshold on the largest centroid displacement.

    Attributes
    ----------
    clusters_ : tuple of HomogeneousCluster
        Label-pure clusters in (label, first member) order.
    labels_ : ndarray of shape (n_samples,)
        Index of the cluster owning each sample.
    n_clusters_ : int
    classes_ : ndarray
        Sorted distinct values of y.
    """

    def __init__(self, max_iter=100, tol=1e-6):
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        ds, classes = _as_dataset(X, y)
        partition = rhc_partition(ds, max_iter=self.max_iter, tol=self.tol)
        self.classes_ = classes
        self.partition_ = partition
        self.clusters_ = partition.clusters
        self.n_clusters_ = len(partition.clusters)
        self.labels_ = partition.member_owner()
        self.n_features_in_ = ds.d
        return self

    def fit_predict(self, X, y):
        return self.fit(X, y).labels_


class _BaseReducer(BaseEstimator):
    """Shared plumbing: fit stores a ReductionResult and summary attributes."""

    def _reduce(self, ds):
        raise NotImplementedError

    def fit(self, X, y):
        ds, classes = _as_dataset(X, y)
        result = self._reduce(ds)
        self.classes_ = classes
        self.result_ = result
        self.reduction_rate_ = result.reduction_rate
        self.n_samples_fit_ = ds.n
        self.n_features_in_ = ds.d
        features, encoded = result.reduced_set(ds)
        self.reduced_features_ = features
        self.reduced_labels_ = classes[encoded]
        return self

    def fit_reduce(self, X, y):
        """Fit and return the reduced (X, y) pair."""
        self.fit(X, y)
        return self.reduced_features_, self.reduced_labels_


class RHCReducer(_BaseReducer):
    """Centroid baseline: keep one synthetic mean point per cluster.

    The reduced points are aggregates, not rows of X, so there is no
    ``sample_indices_`` and no ``transform``.

    Attributes
    ----------
    reduced_features_ : ndarray
        One centroid row per homogeneous cluster.
    reduced_labels_ : ndarray
        Cluster labels mapped back to the values seen in y.
    reduction_rate_ : float
    """

    def __init__(self, max_iter=100, tol=1e-6):
        self.max_iter = max_iter
        self.tol = tol

    def _reduce(self, ds):
        return rhc_reduce(ds, max_iter=self.max_iter, tol=self.tol)


class _SubsetReducer(_BaseReducer):
    def fit(self, X, y):
        super().fit(X, y)
        self.sample_indices_ = self.result_.subset.indices
        return self

    def transform(self, X):
        """Select the fitted sample rows from X (same row order as in fit)."""
        check_is_fitted(self, "sample_indices_")
        X = check_array(X, dtype=None)
        if X.shape[0] != self.n_samples_fit_:
            raise ValueError(
                f"transform expects the {self.n_samples_fit_} rows seen in "
                f"fit, got {X.shape[0]}"
            )
        return X[self.sample_indices_]


class GHCIDRReducer(_SubsetReducer):
    """Annulus sampling over the homogeneous clusters of (X, y).

    Parameters
    ----------
    alpha : float, default=0.85
        Parametric reduction rate in [0, 1]; larger alpha keeps fewer
        points per cluster.
    max_iter, tol
        Passed to the k-means splitting.

    Attributes
    ----------
    sample_indices_ : ndarray
        Strictly increasing indices of the kept rows (an exact subset).
    reduction_rate_ : float
    """

    def __init__(self, alpha=0.85, max_iter=100, tol=1e-6):
        self.alpha = alpha
        self.max_iter = max_iter
        self.tol = tol

    def _reduce(self, ds):
        partition = rhc_partition(ds, max_iter=self.max_iter, tol=self.tol)
        return ghcidr_reduce(ds, partition, self.alpha)


class MergedGHCIDRReducer(_SubsetReducer):
    """Per-class complete-linkage merging followed by annulus sampling.

    Parameters
    ----------
    alpha : float, default=0.85
        Parametric reduction rate in [0, 1].
    beta : float, default=0.4
        Surviving fraction of each class's cluster count, in (0, 1].
    max_iter, tol
        Passed to the k-means splitting.

    Attributes
    ----------
    sample_indices_ : ndarray
    reduction_rate_ : float
    """

    def __init__(self, alpha=0.85, beta=0.4, max_iter=100, tol=1e-6):
        self.alpha = alpha
        self.beta = beta
        self.max_iter = max_iter
        self.tol = tol

    def _reduce(self, ds):
        partition = rhc_partition(ds, max_iter=self.max_iter, tol=self.tol)
        return merged_ghcidr_reduce(ds, partition, self.alpha, self.beta)


class BruteForceKNNClassifier(BaseEstimator, ClassifierMixin):
    """Exact k-NN with deterministic tie handling.

    Distance ties go to the lower train index; vote ties go to the smallest
    class. Useful for scoring reduced sets the same way the evaluation
    report does.
    """

    def __init__(self, k=1):
        self.k = k

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, self._train_labels = np.unique(y, return_inverse=True)
        self._train_features = X
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "_train_features")
        X = check_array(X, dtype=np.float64)
        encoded = knn_predict(
            self._train_features, self._train_labels, X, k=self.k
        )
        return self.classes_[encoded]
