import struct

import numpy as np
import pytest

from ghcidr import LabeledDataset


def blob_dataset(seed, n_classes=3, per_class=20, d=2, spread=0.8, span=4.0):
    """Random Gaussian blobs rescaled into [0, 1] by a global min-max."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-span, span, size=(n_classes, d))
    labels = np.repeat(np.arange(n_classes), per_class)
    X = centers[labels] + rng.normal(0.0, spread, size=(labels.size, d))
    lo, hi = X.min(), X.max()
    X = (X - lo) / (hi - lo)
    return LabeledDataset.from_arrays(X, labels)


def write_idx_pair(tmp_path, images, labels, name="set"):
    """Write an IDX images/labels file pair; images is (n, rows, cols) uint8."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    images_path = tmp_path / f"{name}-images-idx3-ubyte"
    labels_path = tmp_path / f"{name}-labels-idx1-ubyte"
    images_path.write_bytes(
        struct.pack(">IIII", 0x00000803, n, rows, cols) + images.tobytes()
    )
    labels_path.write_bytes(struct.pack(">II", 0x00000801, n) + labels.tobytes())
    return images_path, labels_path


def write_cifar_batch(tmp_path, labels, pixel_rows, name="data_batch_1.bin"):
    """Write a CIFAR-10 binary batch; pixel_rows is (n, 3072) uint8."""
    labels = np.asarray(labels, dtype=np.uint8)
    pixel_rows = np.asarray(pixel_rows, dtype=np.uint8)
    records = np.concatenate([labels[:, None], pixel_rows], axis=1)
    path = tmp_path / name
    path.write_bytes(records.tobytes())
    return path


@pytest.fixture
def small_blobs():
    return blob_dataset(seed=11, n_classes=3, per_class=15, d=2, spread=0.5)


@pytest.fixture
def overlapping_blobs():
    return blob_dataset(seed=5, n_classes=3, per_class=60, d=2, spread=2.2, span=2.0)
