import math

import numpy as np
import pytest

from ghcidr import (
    CentroidSet,
    DataConsistencyError,
    LabeledDataset,
    class_means,
    euclidean_distance,
    kmeans,
)
from conftest import blob_dataset


def reference_lloyd(X, C0, max_iter=1000):
    """Plain-python Lloyd run to its assignment fixed point (same tie rule)."""
    C = [np.array(c, dtype=float) for c in C0]
    owners = None
    for _ in range(max_iter):
        new_owners = []
        for x in X:
            dists = [math.sqrt(math.fsum((x - c) ** 2)) for c in C]
            new_owners.append(int(np.argmin(dists)))
        counts = [new_owners.count(j) for j in range(len(C))]
        assert min(counts) > 0, "oracle fixture must not empty a centroid"
        if owners == new_owners:
            break
        owners = new_owners
        C = [
            np.mean([x for x, o in zip(X, owners) if o == j], axis=0)
            for j in range(len(C))
        ]
    inertia = math.fsum(
        math.fsum((x - C[o]) ** 2) for x, o in zip(X, owners)
    )
    return owners, C, inertia


class TestEuclideanDistance:
    def test_identity(self):
        assert euclidean_distance([0.3, 0.4], [0.3, 0.4]) == 0.0

    def test_3_4_5(self):
        assert euclidean_distance([0.0, 0.0], [3.0, 4.0]) == 5.0

    def test_symmetry(self):
        a, b = [0.1, 0.9, 0.5], [0.4, 0.2, 0.8]
        assert euclidean_distance(a, b) == euclidean_distance(b, a)

    def test_matches_compensated_summation_oracle(self):
        rng = np.random.default_rng(42)
        a = rng.uniform(0, 1, size=784)
        b = rng.uniform(0, 1, size=784)
        oracle = math.sqrt(math.fsum((x - y) ** 2 for x, y in zip(a, b)))
        assert abs(euclidean_distance(a, b) - oracle) < 1e-9

    def test_dimension_mismatch(self):
        with pytest.raises(DataConsistencyError):
            euclidean_distance([0.1, 0.2], [0.1, 0.2, 0.3])


class TestClassMeans:
    def test_single_label(self):
        ds = LabeledDataset.from_arrays([[0.2, 0.4], [0.6, 0.8]], [1, 1], num_classes=2)
        cs = class_means(ds, np.arange(2))
        assert cs.k == 1
        assert np.allclose(cs.centroids[0], [0.4, 0.6])
        assert cs.seed_labels[0] == 1

    def test_two_points_two_labels(self):
        ds = LabeledDataset.from_arrays([[0.0, 0.0], [0.5, 0.5]], [0, 1])
        cs = class_means(ds, np.arange(2))
        assert np.allclose(cs.centroids, [[0.0, 0.0], [0.5, 0.5]])
        assert list(cs.seed_labels) == [0, 1]

    def test_matches_per_class_average_oracle(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(0, 1, size=(6, 3))
        y = np.array([0, 1, 0, 1, 0, 1])
        ds = LabeledDataset.from_arrays(X, y)
        cs = class_means(ds, np.arange(6))
        for row, label in enumerate(cs.seed_labels):
            expected = np.array(
                [X[i] for i in range(6) if y[i] == label]
            ).mean(axis=0)
            assert np.allclose(cs.centroids[row], expected, atol=1e-12)

    def test_empty_scope(self):
        ds = LabeledDataset.from_arrays([[0.1]], [0])
        with pytest.raises(DataConsistencyError):
            class_means(ds, np.array([], dtype=np.int64))


class TestKMeans:
    def test_separated_blobs_keep_class_membership(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(0.0, 0.2, size=(10, 2))
        b = rng.uniform(0.8, 1.0, size=(10, 2))
        ds = LabeledDataset.from_arrays(
            np.vstack([a, b]), [0] * 10 + [1] * 10
        )
        init = class_means(ds, np.arange(20))
        owners, centroids = kmeans(ds, np.arange(20), init)
        assert list(owners) == [0] * 10 + [1] * 10
        assert np.allclose(centroids.centroids[0], a.mean(axis=0))
        assert np.allclose(centroids.centroids[1], b.mean(axis=0))

    def test_k1_returns_scope_mean(self):
        ds = blob_dataset(seed=3, n_classes=1, per_class=12)
        init = class_means(ds, np.arange(ds.n))
        owners, centroids = kmeans(ds, np.arange(ds.n), init)
        assert (owners == 0).all()
        assert np.allclose(centroids.centroids[0], ds.features.mean(axis=0))

    def test_matches_reference_lloyd_fixed_point(self):
        rng = np.random.default_rng(4)
        X = rng.uniform(0, 1, size=(20, 2))
        y = rng.integers(0, 2, size=20)
        y[:2] = [0, 1]  # both classes present
        ds = LabeledDataset.from_arrays(X, y)
        init = class_means(ds, np.arange(20))
        owners, centroids = kmeans(ds, np.arange(20), init, max_iter=500, tol=0.0)
        ref_owners, _, ref_inertia = reference_lloyd(X, init.centroids)
        assert list(owners) == ref_owners
        inertia = sum(
            float(((X[i] - centroids.centroids[o]) ** 2).sum())
            for i, o in enumerate(owners)
        )
        assert abs(inertia - ref_inertia) < 1e-9

    def test_k_exceeding_scope_rejected(self):
        ds = LabeledDataset.from_arrays([[0.1, 0.1], [0.9, 0.9]], [0, 1])
        init = class_means(ds, np.arange(2))
        with pytest.raises(DataConsistencyError):
            kmeans(ds, np.array([0]), init)

    def test_empty_centroid_reseeded_to_farthest_point(self):
        ds = LabeledDataset.from_arrays([[0.2], [0.8]], [0, 1])
        init = CentroidSet(np.array([[0.2], [0.2]]), np.array([0, 1]))
        owners, centroids = kmeans(ds, np.arange(2), init)
        assert sorted(owners) == [0, 1]
        assert centroids.k == 2
        assert sorted(float(c[0]) for c in centroids.centroids) == [0.2, 0.8]

    def test_within_cluster_ss_non_increasing_over_iterations(self):
        ds = blob_dataset(seed=9, n_classes=3, per_class=15, spread=1.5)
        init = class_means(ds, np.arange(ds.n))
        previous = None
        for iters in range(1, 12):
            owners, cents = kmeans(ds, np.arange(ds.n), init, max_iter=iters, tol=0.0)
            wcss = sum(
                float(((ds.features[i] - cents.centroids[o]) ** 2).sum())
                for i, o in enumerate(owners)
            )
            if previous is not None:
                assert wcss <= previous + 1e-9
            previous = wcss

    def test_deterministic(self):
        ds = blob_dataset(seed=10, n_classes=4, per_class=12, spread=1.0)
        init = class_means(ds, np.arange(ds.n))
        first, c1 = kmeans(ds, np.arange(ds.n), init)
        second, c2 = kmeans(ds, np.arange(ds.n), init)
        assert np.array_equal(first, second)
        assert np.array_equal(c1.centroids, c2.centroids)

    def test_every_returned_centroid_owns_a_point(self):
        for seed in range(6):
            ds = blob_dataset(seed=seed, n_classes=3, per_class=8, spread=2.5)
            init = class_means(ds, np.arange(ds.n))
            owners, cents = kmeans(ds, np.arange(ds.n), init)
            counts = np.bincount(owners, minlength=cents.k)
            assert (counts > 0).all()

    def test_parameter_validation(self):
        ds = LabeledDataset.from_arrays([[0.1], [0.9]], [0, 1])
        init = class_means(ds, np.arange(2))
        with pytest.raises(ValueError):
            kmeans(ds, np.arange(2), init, max_iter=0)
        with pytest.raises(ValueError):
            kmeans(ds, np.arange(2), init, tol=-1.0)
