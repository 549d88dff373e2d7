"""Dataset reduction through recursive homogeneous clustering.

Three algorithms over one pipeline: ``rhc`` partitions a labeled dataset
into label-pure clusters and keeps their centroids; ``ghcidr`` instead
samples real rows from each cluster by annulus decomposition, so the result
is an exact index subset; ``merged-ghcidr`` first merges each class's
clusters by complete linkage to regain a target reduction rate, then
samples. A brute-force k-NN evaluator scores reduced sets.
"""

from .annulus import AnnulusPlan, ghcidr_reduce, plan_annuli, select_from_cluster
from .datasets import (
    DatasetSource,
    LabeledDataset,
    SubsetSpec,
    load_cifar10,
    load_csv,
    load_idx,
    read_indices,
    write_subset,
)
from .estimators import (
    BruteForceKNNClassifier,
    GHCIDRReducer,
    MergedGHCIDRReducer,
    RHCPartitioner,
    RHCReducer,
)
from .evaluation import evaluate, knn_accuracy, knn_predict, reduction_rate
from .exceptions import (
    CalibrationError,
    DataConsistencyError,
    DataFormatError,
    TruncatedFileError,
)
from .kmeans import CentroidSet, class_means, euclidean_distance, kmeans
from .merge import (
    CalibrationResult,
    MergePlan,
    build_merge_plans,
    calibrate_beta,
    complete_linkage_distance,
    merge_class,
    merged_ghcidr_reduce,
    merged_partition,
)
from .results import ReductionResult
from .rhc import (
    HomogeneousCluster,
    Partition,
    partition_from_json,
    partition_stats,
    partition_to_json,
    rhc_partition,
    rhc_reduce,
)

__version__ = "0.1.0"

__all__ = [
    "AnnulusPlan",
    "BruteForceKNNClassifier",
    "CalibrationError",
    "CalibrationResult",
    "CentroidSet",
    "DataConsistencyError",
    "DataFormatError",
    "DatasetSource",
    "GHCIDRReducer",
    "HomogeneousCluster",
    "LabeledDataset",
    "MergePlan",
    "MergedGHCIDRReducer",
    "Partition",
    "RHCPartitioner",
    "RHCReducer",
    "ReductionResult",
    "SubsetSpec",
    "TruncatedFileError",
    "build_merge_plans",
    "calibrate_beta",
    "class_means",
    "complete_linkage_distance",
    "euclidean_distance",
    "evaluate",
    "ghcidr_reduce",
    "kmeans",
    "knn_accuracy",
    "knn_predict",
    "load_cifar10",
    "load_csv",
    "load_idx",
    "merge_class",
    "merged_ghcidr_reduce",
    "merged_partition",
    "partition_from_json",
    "partition_stats",
    "partition_to_json",
    "plan_annuli",
    "read_indices",
    "reduction_rate",
    "rhc_partition",
    "rhc_reduce",
    "select_from_cluster",
    "write_subset",
]
