"""Labeled dataset loading, validation, and subset materialization.

Supported on-disk formats:

* IDX (MNIST-style): big-endian magic 0x00000803 for images and 0x00000801
  for labels, big-endian u32 dimensions, then a raw u8 payload. Files
  compressed with gzip are detected by their two-byte signature and
  decompressed transparently.
* CIFAR-10 binary: a sequence of 3073-byte records, first byte is the label,
  followed by 3072 channel-major pixel bytes.
* CSV: ``label,f1,...,fd`` rows with an optional single header line.

Pixel-style inputs are scaled into [0, 1] by dividing by 255; CSV input must
either already be in [0, 1] or request a global min-max rescale. Loaders
reject anything that would violate a :class:`LabeledDataset` invariant
instead of clamping silently.
"""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass

import numpy as np

from .exceptions import DataConsistencyError, DataFormatError, TruncatedFileError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CIFAR10_RECORD_BYTES = 3073
CIFAR10_NUM_CLASSES = 10

_GZIP_SIGNATURE = b"\x1f\x8b"


@dataclass(frozen=True)
class DatasetSource:
    """Provenance descriptor carried into reports."""

    format: str
    paths: tuple[str, ...]
    scaling: str

    def describe(self) -> str:
        joined = ", ".join(self.paths)
        return f"{self.format}[{self.scaling}]({joined})"


_MEMORY_SOURCE = DatasetSource(format="arrays", paths=(), scaling="as-given")


@dataclass(frozen=True)
class LabeledDataset:
    """n feature rows in [0, 1] with integer class labels.

    Immutable after construction: the backing arrays are copied and marked
    read-only, so a dataset is safe to share across concurrent workers.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    source: DatasetSource

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64, order="C", copy=True)
        labels = np.array(self.labels, dtype=np.int64, copy=True)
        if features.ndim != 2:
            raise DataConsistencyError(
                f"features must be a 2-D matrix, got shape {features.shape}"
            )
        n, d = features.shape
        if n < 1 or d < 1:
            raise DataConsistencyError(
                f"dataset must have n >= 1 and d >= 1, got n={n}, d={d}"
            )
        if labels.shape != (n,):
            raise DataConsistencyError(
                f"labels length {labels.shape} does not match {n} feature rows"
            )
        if not np.isfinite(features).all():
            raise DataConsistencyError("features contain non-finite values")
        if features.min() < 0.0 or features.max() > 1.0:
            raise DataConsistencyError(
                "feature values must lie in [0, 1]; rescale the input first"
            )
        if not isinstance(self.num_classes, (int, np.integer)) or self.num_classes < 1:
            raise DataConsistencyError(f"num_classes must be >= 1, got {self.num_classes}")
        if labels.min() < 0 or labels.max() >= self.num_classes:
            raise DataConsistencyError(
                f"labels must lie in [0, {self.num_classes}), "
                f"found range [{labels.min()}, {labels.max()}]"
            )
        features.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "num_classes", int(self.num_classes))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    @classmethod
    def from_arrays(cls, features, labels, num_classes=None, source=None):
        labels = np.asarray(labels)
        if num_classes is None:
            if labels.size == 0:
                raise DataConsistencyError("cannot infer num_classes from empty labels")
            num_classes = int(labels.max()) + 1
        return cls(
            features=np.asarray(features),
            labels=labels,
            num_classes=num_classes,
            source=source or _MEMORY_SOURCE,
        )


@dataclass(frozen=True)
class SubsetSpec:
    """A strictly increasing, duplicate-free list of dataset row indices."""

    indices: np.ndarray

    def __post_init__(self):
        indices = np.array(self.indices, dtype=np.int64, copy=True)
        if indices.ndim != 1 or indices.size == 0:
            raise DataConsistencyError("subset must be a non-empty 1-D index list")
        if indices.min() < 0:
            raise DataConsistencyError("subset indices must be non-negative")
        if not (np.diff(indices) > 0).all():
            raise DataConsistencyError("subset indices must be strictly increasing")
        indices.flags.writeable = False
        object.__setattr__(self, "indices", indices)

    def __len__(self) -> int:
        return int(self.indices.size)

    def validate_against(self, n: int) -> None:
        if self.indices[-1] >= n:
            raise DataConsistencyError(
                f"subset index {int(self.indices[-1])} is out of range for n={n}"
            )

    @classmethod
    def from_iterable(cls, indices):
        return cls(np.sort(np.unique(np.asarray(list(indices), dtype=np.int64))))


def _read_binary(path) -> bytes:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] == _GZIP_SIGNATURE:
        raw = gzip.decompress(raw)
    return raw


def _resolve_num_classes(labels: np.ndarray, override) -> int:
    inferred = int(labels.max()) + 1
    if override is None:
        return inferred
    override = int(override)
    if override < inferred:
        raise DataConsistencyError(
            f"num_classes override {override} is below observed max label "
            f"{inferred - 1}"
        )
    return override


def load_idx(images_path, labels_path, num_classes=None) -> LabeledDataset:
    """Load an IDX image/label file pair into a dataset.

    Pixel bytes are divided by 255 so features land in [0, 1]; feature
    dimensionality is rows*cols.
    """
    images_raw = _read_binary(images_path)
    labels_raw = _read_binary(labels_path)

    if len(images_raw) < 4:
        raise TruncatedFileError(images_path, len(images_raw))
    (magic,) = struct.unpack_from(">I", images_raw, 0)
    if magic != IDX_IMAGES_MAGIC:
        raise DataFormatError(
            f"{images_path}: expected image magic 0x{IDX_IMAGES_MAGIC:08x}, "
            f"found 0x{magic:08x}"
        )
    if len(images_raw) < 16:
        raise TruncatedFileError(
            images_path,
            len(images_raw),
            f"{images_path}: image header needs 16 bytes, file ends at byte "
            f"{len(images_raw)}",
        )
    count, rows, cols = struct.unpack_from(">III", images_raw, 4)
    if count < 1 or rows < 1 or cols < 1:
        raise DataFormatError(
            f"{images_path}: invalid dimensions count={count}, rows={rows}, cols={cols}"
        )
    payload = count * rows * cols
    if len(images_raw) - 16 < payload:
        raise TruncatedFileError(
            images_path,
            len(images_raw),
            f"{images_path}: expected {16 + payload} bytes, file ends at byte "
            f"{len(images_raw)}",
        )
    if len(images_raw) - 16 > payload:
        raise DataFormatError(
            f"{images_path}: {len(images_raw) - 16 - payload} trailing bytes "
            f"after the declared payload"
        )

    if len(labels_raw) < 4:
        raise TruncatedFileError(labels_path, len(labels_raw))
    (label_magic,) = struct.unpack_from(">I", labels_raw, 0)
    if label_magic != IDX_LABELS_MAGIC:
        raise DataFormatError(
            f"{labels_path}: expected label magic 0x{IDX_LABELS_MAGIC:08x}, "
            f"found 0x{label_magic:08x}"
        )
    if len(labels_raw) < 8:
        raise TruncatedFileError(
            labels_path,
            len(labels_raw),
            f"{labels_path}: label header needs 8 bytes, file ends at byte "
            f"{len(labels_raw)}",
        )
    (label_count,) = struct.unpack_from(">I", labels_raw, 4)
    if label_count != count:
        raise DataConsistencyError(
            f"item count mismatch: {images_path} declares {count}, "
            f"{labels_path} declares {label_count}"
        )
    if len(labels_raw) - 8 < label_count:
        raise TruncatedFileError(
            labels_path,
            len(labels_raw),
            f"{labels_path}: expected {8 + label_count} bytes, file ends at "
            f"byte {len(labels_raw)}",
        )
    if len(labels_raw) - 8 > label_count:
        raise DataFormatError(
            f"{labels_path}: {len(labels_raw) - 8 - label_count} trailing "
            f"bytes after the declared payload"
        )

    pixels = np.frombuffer(images_raw, dtype=np.uint8, offset=16)
    features = pixels.reshape(count, rows * cols).astype(np.float64) / 255.0
    labels = np.frombuffer(labels_raw, dtype=np.uint8, offset=8).astype(np.int64)
    return LabeledDataset(
        features=features,
        labels=labels,
        num_classes=_resolve_num_classes(labels, num_classes),
        source=DatasetSource(
            format="idx",
            paths=(str(images_path), str(labels_path)),
            scaling="divide-by-255",
        ),
    )


def load_cifar10(batch_paths) -> LabeledDataset:
    """Load and concatenate CIFAR-10 binary batches (3073-byte records)."""
    batch_paths = [str(p) for p in batch_paths]
    if not batch_paths:
        raise DataConsistencyError("at least one CIFAR-10 batch path is required")
    feature_blocks = []
    label_blocks = []
    for path in batch_paths:
        raw = _read_binary(path)
        if len(raw) == 0 or len(raw) % CIFAR10_RECORD_BYTES != 0:
            raise DataFormatError(
                f"{path}: length {len(raw)} is not a positive multiple of "
                f"{CIFAR10_RECORD_BYTES}"
            )
        records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR10_RECORD_BYTES)
        labels = records[:, 0]
        if labels.max() >= CIFAR10_NUM_CLASSES:
            bad = int(np.argmax(labels >= CIFAR10_NUM_CLASSES))
            raise DataConsistencyError(
                f"{path}: record {bad} has label byte {int(labels[bad])}, "
                f"expected < {CIFAR10_NUM_CLASSES}"
            )
        feature_blocks.append(records[:, 1:].astype(np.float64) / 255.0)
        label_blocks.append(labels.astype(np.int64))
    return LabeledDataset(
        features=np.concatenate(feature_blocks, axis=0),
        labels=np.concatenate(label_blocks),
        num_classes=CIFAR10_NUM_CLASSES,
        source=DatasetSource(
            format="cifar10",
            paths=tuple(batch_paths),
            scaling="divide-by-255",
        ),
    )


def load_csv(path, has_header=False, normalize=False, num_classes=None) -> LabeledDataset:
    """Load ``label,f1,...,fd`` rows.

    With ``normalize`` the feature matrix is rescaled by a single global
    min-max transform into [0, 1]; otherwise values must already be there.
    """
    labels = []
    rows = []
    width = None
    with open(path, newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if row_no == 1 and has_header:
                continue
            if len(row) < 2:
                raise DataFormatError(
                    f"{path}: row {row_no}: expected 'label,f1,...', got "
                    f"{len(row)} field(s)"
                )
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataFormatError(
                    f"{path}: row {row_no}: expected {width - 1} feature "
                    f"values, found {len(row) - 1}"
                )
            try:
                labels.append(int(row[0]))
            except ValueError:
                raise DataFormatError(
                    f"{path}: row {row_no}, column 1: invalid label {row[0]!r}"
                ) from None
            values = []
            for col_no, cell in enumerate(row[1:], start=2):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataFormatError(
                        f"{path}: row {row_no}, column {col_no}: invalid "
                        f"number {cell!r}"
                    ) from None
            rows.append(values)
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    features = np.asarray(rows, dtype=np.float64)
    label_arr = np.asarray(labels, dtype=np.int64)
    if not np.isfinite(features).all():
        raise DataFormatError(f"{path}: non-finite feature values")
    if label_arr.min() < 0:
        raise DataConsistencyError(f"{path}: negative class labels")
    if normalize:
        lo = features.min()
        hi = features.max()
        if hi > lo:
            features = (features - lo) / (hi - lo)
        else:
            features = np.zeros_like(features)
        scaling = "global-minmax"
    else:
        if features.min() < 0.0 or features.max() > 1.0:
            raise DataFormatError(
                f"{path}: feature values outside [0, 1]; pass normalize=True "
                f"to rescale"
            )
        scaling = "as-given"
    return LabeledDataset(
        features=features,
        labels=label_arr,
        num_classes=_resolve_num_classes(label_arr, num_classes),
        source=DatasetSource(format="csv", paths=(str(path),), scaling=scaling),
    )


def write_rows_csv(features, labels, out_path) -> None:
    """Write ``label,f1,...,fd`` rows; floats use repr so values round-trip."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    with open(out_path, "w") as fh:
        for label, row in zip(labels, features):
            fh.write(str(int(label)))
            for value in row:
                fh.write(",")
                fh.write(repr(float(value)))
            fh.write("\n")


def write_subset(ds: LabeledDataset, spec: SubsetSpec, out_path, fmt="indices") -> None:
    """Materialize a subset either as an index list or as CSV rows.

    ``indices`` writes one decimal index per line, ascending, with a trailing
    newline. ``csv`` writes the selected rows with values exactly as stored
    (no un-normalization).
    """
    spec.validate_against(ds.n)
    if fmt == "indices":
        with open(out_path, "w") as fh:
            for index in spec.indices:
                fh.write(f"{int(index)}\n")
    elif fmt == "csv":
        write_rows_csv(ds.features[spec.indices], ds.labels[spec.indices], out_path)
    else:
        raise ValueError(f"unknown subset format {fmt!r}; use 'indices' or 'csv'")


def read_indices(path) -> SubsetSpec:
    """Read an index file written by :func:`write_subset`."""
    values = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(int(line))
            except ValueError:
                raise DataFormatError(
                    f"{path}: line {line_no}: invalid index {line!r}"
                ) from None
    if not values:
        raise DataFormatError(f"{path}: empty index file")
    return SubsetSpec(np.asarray(values, dtype=np.int64))
