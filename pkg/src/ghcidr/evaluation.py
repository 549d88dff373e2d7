"""Reduced-set quality measurement: exact k-NN and report assembly.

The classifier is a brute-force exact k-NN; it stands in for training a
network on the reduced data, so reports label its output
``knn_proxy_accuracy`` to keep the two ideas apart.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DataConsistencyError

_TEST_CHUNK = 256


def reduction_rate(original_n: int, reduced_n: int) -> float:
    """Percent of the dataset removed: 100 * (1 - reduced/original)."""
    if original_n < 1:
        raise DataConsistencyError(f"original_n must be positive, got {original_n}")
    if reduced_n < 1:
        raise DataConsistencyError(f"reduced_n must be positive, got {reduced_n}")
    if reduced_n > original_n:
        raise DataConsistencyError(
            f"reduced_n {reduced_n} exceeds original_n {original_n}"
        )
    return 100.0 * (1.0 - reduced_n / original_n)


def knn_predict(train_features, train_labels, test_features, k: int = 1) -> np.ndarray:
    """Exact k-NN predictions.

    Distance ties resolve to the lower train index (stable sort); vote ties
    resolve to the smallest label among the tied classes.
    """
    train_features = np.asarray(train_features, dtype=np.float64)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    test_features = np.asarray(test_features, dtype=np.float64)
    n_train = train_features.shape[0]
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > n_train:
        raise ValueError(f"k={k} exceeds train size {n_train}")
    if train_features.shape[1] != test_features.shape[1]:
        raise DataConsistencyError(
            f"feature dimensionality mismatch: train d={train_features.shape[1]}, "
            f"test d={test_features.shape[1]}"
        )
    num_classes = int(train_labels.max()) + 1
    t2 = np.einsum("ij,ij->i", train_features, train_features)
    predictions = np.empty(test_features.shape[0], dtype=np.int64)
    for start in range(0, test_features.shape[0], _TEST_CHUNK):
        chunk = test_features[start:start + _TEST_CHUNK]
        d2 = (
            np.einsum("ij,ij->i", chunk, chunk)[:, None]
            - 2.0 * (chunk @ train_features.T)
            + t2[None, :]
        )
        neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]
        for row, neighbor_idx in enumerate(neighbors):
            votes = np.bincount(train_labels[neighbor_idx], minlength=num_classes)
            predictions[start + row] = int(np.argmax(votes))
    return predictions


def knn_accuracy(train_features, train_labels, test_features, test_labels,
                 k: int = 1) -> float:
    """Percent of test points whose k-NN vote matches the true label."""
    test_labels = np.asarray(test_labels, dtype=np.int64)
    predictions = knn_predict(train_features, train_labels, test_features, k=k)
    return 100.0 * float((predictions == test_labels).mean())


def evaluate(ds_train, result, ds_test, k: int = 1,
             include_full_baseline: bool = False) -> dict:
    """Score a reduction against a test set with the k-NN proxy metric."""
    if result.original_count != ds_train.n:
        raise DataConsistencyError(
            f"result was produced from a dataset of {result.original_count} "
            f"rows, got one with {ds_train.n}"
        )
    if result.source is not None and result.source != ds_train.source.describe():
        raise DataConsistencyError(
            f"result provenance {result.source!r} does not match dataset "
            f"{ds_train.source.describe()!r}"
        )
    if ds_train.d != ds_test.d:
        raise DataConsistencyError(
            f"train d={ds_train.d} does not match test d={ds_test.d}"
        )
    reduced_features, reduced_labels = result.reduced_set(ds_train)
    per_class = np.bincount(reduced_labels, minlength=ds_train.num_classes)
    report = {
        "algorithm": result.algorithm,
        "params": dict(result.params),
        "k": int(k),
        "knn_proxy_accuracy": knn_accuracy(
            reduced_features, reduced_labels, ds_test.features, ds_test.labels, k=k
        ),
        "reduction_rate": result.reduction_rate,
        "n_train": ds_train.n,
        "n_reduced": result.reduced_count,
        "n_test": ds_test.n,
        "synthetic": bool(result.synthetic),
        "per_class_retained": {str(c): int(v) for c, v in enumerate(per_class)},
        "metric_note": (
            "knn_proxy_accuracy is a brute-force k-NN sanity metric on the "
            "reduced set, not a neural-network benchmark"
        ),
    }
    if include_full_baseline:
        report["full_knn_accuracy"] = knn_accuracy(
            ds_train.features, ds_train.labels, ds_test.features, ds_test.labels, k=k
        )
    return report
