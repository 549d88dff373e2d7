"""Command-line front end: reduce, stats, evaluate, calibrate-beta.

Exit codes: 0 success, 1 usage error, 2 data/consistency error. Reports are
JSON with sorted keys, so identical inputs produce byte-identical documents
except for the wall_time_per_stage values.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
import time

import numpy as np
from threadpoolctl import threadpool_limits

from . import annulus, datasets, evaluation, merge, rhc
from .exceptions import CalibrationError, DataConsistencyError, DataFormatError
from .results import ReductionResult

#: Per-dataset (alpha, beta) defaults for the named benchmark inputs.
PRESETS = {
    "mnist": {"alpha": 0.85, "beta": 0.4},
    "fmnist": {"alpha": 0.9, "beta": 0.38},
    "cifar10": {"alpha": 0.4, "beta": 0.3},
    "tiny-imagenet": {"alpha": 0.4, "beta": 0.5},
}

ANNULUS_MEMBERSHIP_NOTE = "half-open [R1, R2), outermost annulus closed at R2"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_dataset_flags(parser, prefix="", help_noun="training"):
    flag = lambda name: f"--{prefix}{name}"
    parser.add_argument(
        flag("input"), action="append", dest=f"{prefix.replace('-', '_')}input",
        metavar="PATH", help=f"{help_noun} data file; repeat for cifar10 batches",
    )
    parser.add_argument(
        flag("labels"), dest=f"{prefix.replace('-', '_')}labels", metavar="PATH",
        help=f"{help_noun} labels file (idx format only)",
    )
    parser.add_argument(
        flag("format"), dest=f"{prefix.replace('-', '_')}format",
        choices=("idx", "cifar10", "csv"),
        help=f"{help_noun} data format",
    )


def _add_common_flags(parser):
    parser.add_argument("--csv-header", action="store_true",
                        help="skip one header line in csv input")
    parser.add_argument("--csv-normalize", action="store_true",
                        help="min-max rescale csv features into [0, 1]")
    parser.add_argument("--num-classes", type=int, default=None,
                        help="override the inferred class count")
    parser.add_argument("--partition-cache", metavar="PATH", default=None,
                        help="JSON partition cache; reused when present")
    parser.add_argument("--threads", type=int, default=None,
                        help="bound on worker-thread parallelism")
    parser.add_argument("--output", metavar="PATH", default=None)


def build_parser() -> _Parser:
    from . import __version__

    parser = _Parser(prog="ghcidr", description=__doc__)
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    reduce_p = sub.add_parser("reduce", help="run a reduction algorithm")
    _add_dataset_flags(reduce_p)
    _add_common_flags(reduce_p)
    reduce_p.add_argument("--algorithm", required=True,
                          choices=("rhc", "ghcidr", "merged-ghcidr"))
    reduce_p.add_argument("--alpha", type=float, default=None)
    reduce_p.add_argument("--beta", type=float, default=None)
    reduce_p.add_argument("--preset", choices=sorted(PRESETS),
                          help="fill alpha/beta defaults for a named dataset")
    reduce_p.add_argument("--output-format", default="json-report",
                          choices=("indices", "csv", "json-report"))

    stats_p = sub.add_parser("stats", help="cluster-size histogram of the partition")
    _add_dataset_flags(stats_p)
    _add_common_flags(stats_p)

    eval_p = sub.add_parser("evaluate", help="k-NN proxy evaluation of a reduction")
    _add_dataset_flags(eval_p)
    _add_dataset_flags(eval_p, prefix="test-", help_noun="test")
    _add_common_flags(eval_p)
    eval_p.add_argument("--algorithm", required=True,
                        choices=("rhc", "ghcidr", "merged-ghcidr"))
    eval_p.add_argument("--alpha", type=float, default=None)
    eval_p.add_argument("--beta", type=float, default=None)
    eval_p.add_argument("--preset", choices=sorted(PRESETS))
    eval_p.add_argument("--selection", metavar="PATH", default=None,
                        help="reuse a previously written indices file")
    eval_p.add_argument("--k", type=int, default=1)
    eval_p.add_argument("--full-baseline", action="store_true",
                        help="also score the unreduced training set (slow)")

    cal_p = sub.add_parser("calibrate-beta",
                           help="find beta hitting a target reduction rate")
    _add_dataset_flags(cal_p)
    _add_common_flags(cal_p)
    cal_p.add_argument("--alpha", type=float, required=False, default=None)
    cal_p.add_argument("--target-reduction", type=float, default=None,
                       help="target percent; defaults to the rhc rate")
    cal_p.add_argument("--tolerance", type=float, default=0.1)
    return parser


def _load_dataset(args, prefix=""):
    field = lambda name: getattr(args, f"{prefix}{name}")
    paths = field("input")
    fmt = field("format")
    if not paths:
        raise UsageError(f"--{prefix.replace('_', '-')}input is required")
    if fmt is None:
        raise UsageError(f"--{prefix.replace('_', '-')}format is required")
    if fmt == "idx":
        if field("labels") is None:
            raise UsageError(
                f"--{prefix.replace('_', '-')}labels is required for idx input"
            )
        if len(paths) != 1:
            raise UsageError("idx input takes exactly one images file")
        return datasets.load_idx(paths[0], field("labels"),
                                 num_classes=args.num_classes)
    if fmt == "cifar10":
        if args.num_classes is not None and args.num_classes != 10:
            raise UsageError("--num-classes is fixed at 10 for cifar10 input")
        return datasets.load_cifar10(paths)
    if len(paths) != 1:
        raise UsageError("csv input takes exactly one file")
    return datasets.load_csv(paths[0], has_header=args.csv_header,
                             normalize=args.csv_normalize,
                             num_classes=args.num_classes)


def _get_partition(ds, args, timings):
    cache = args.partition_cache
    if cache:
        try:
            with open(cache) as fh:
                document = json.load(fh)
        except FileNotFoundError:
            document = None
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{cache}: not valid JSON: {exc}") from None
        if document is not None:
            t0 = time.perf_counter()
            partition = rhc.partition_from_json(document, ds)
            timings["partition_cache_load"] = time.perf_counter() - t0
            return partition
    t0 = time.perf_counter()
    partition = rhc.rhc_partition(ds)
    timings["partition"] = time.perf_counter() - t0
    if cache:
        with open(cache, "w") as fh:
            json.dump(rhc.partition_to_json(partition), fh)
    return partition


def _resolve_params(args):
    alpha, beta = args.alpha, args.beta
    if getattr(args, "preset", None):
        preset = PRESETS[args.preset]
        alpha = preset["alpha"] if alpha is None else alpha
        beta = preset["beta"] if beta is None else beta
    if args.algorithm in ("ghcidr", "merged-ghcidr") and alpha is None:
        raise UsageError(f"--alpha is required for --algorithm {args.algorithm}")
    if args.algorithm == "merged-ghcidr" and beta is None:
        raise UsageError("--beta is required for --algorithm merged-ghcidr")
    return alpha, beta


def _run_algorithm(ds, partition, args, timings):
    alpha, beta = _resolve_params(args)
    if args.algorithm == "rhc":
        result = rhc.rhc_reduce(ds, partition=partition)
        selection_partition = partition
    elif args.algorithm == "ghcidr":
        result = annulus.ghcidr_reduce(ds, partition, alpha)
        selection_partition = partition
    else:
        t0 = time.perf_counter()
        merged = merge.merged_partition(ds, partition, beta)
        timings["merge"] = time.perf_counter() - t0
        result = merge.merged_ghcidr_reduce(ds, partition, alpha, beta,
                                            merged=merged)
        selection_partition = merged
    timings.update(result.wall_time)
    result.wall_time = timings
    return result, selection_partition


def _reduce_report(ds, result, selection_partition):
    if result.synthetic:
        per_class = np.bincount(result.synthetic_labels,
                                minlength=ds.num_classes)
    else:
        per_class = np.bincount(ds.labels[result.subset.indices],
                                minlength=ds.num_classes)
    report = {
        "algorithm": result.algorithm,
        "params": result.params,
        "n": ds.n,
        "reduced_n": result.reduced_count,
        "reduction_rate": result.reduction_rate,
        "per_class_counts": {str(c): int(v) for c, v in enumerate(per_class)},
        "cluster_size_histogram": {
            str(size): count
            for size, count in selection_partition.size_histogram().items()
        },
        "wall_time_per_stage": result.wall_time,
        "synthetic": result.synthetic,
        "source": result.source,
        "feature_scaling": ds.source.scaling,
        "annulus_membership": ANNULUS_MEMBERSHIP_NOTE,
    }
    if not result.synthetic:
        report["selected_indices"] = [int(i) for i in result.subset.indices]
    return report


def _emit(document, output_path):
    text = json.dumps(document, indent=2, sort_keys=True)
    if output_path:
        with open(output_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_reduce(args) -> int:
    if args.output is None:
        raise UsageError("--output is required for reduce")
    timings = {}
    t0 = time.perf_counter()
    ds = _load_dataset(args)
    timings["load"] = time.perf_counter() - t0
    partition = _get_partition(ds, args, timings)
    result, selection_partition = _run_algorithm(ds, partition, args, timings)
    if args.output_format == "indices" and result.synthetic:
        raise UsageError(
            "rhc produces synthetic centroids, not dataset indices; use "
            "--output-format csv or json-report"
        )
    t0 = time.perf_counter()
    if args.output_format == "indices":
        datasets.write_subset(ds, result.subset, args.output, fmt="indices")
    elif args.output_format == "csv":
        if result.synthetic:
            datasets.write_rows_csv(result.synthetic_features,
                                    result.synthetic_labels, args.output)
        else:
            datasets.write_subset(ds, result.subset, args.output, fmt="csv")
    timings["write"] = time.perf_counter() - t0
    report = _reduce_report(ds, result, selection_partition)
    if args.output_format == "json-report":
        _emit(report, args.output)
    else:
        _emit(report, args.output + ".report.json")
    return 0


def _cmd_stats(args) -> int:
    timings = {}
    ds = _load_dataset(args)
    partition = _get_partition(ds, args, timings)
    stats = rhc.partition_stats(partition)
    stats["histogram"] = {str(k): v for k, v in stats["histogram"].items()}
    stats["wall_time_per_stage"] = timings
    _emit(stats, args.output)
    return 0


def _cmd_evaluate(args) -> int:
    timings = {}
    ds = _load_dataset(args)
    ds_test = _load_dataset(args, prefix="test_")
    if args.selection:
        if args.algorithm == "rhc":
            raise UsageError("--selection cannot be combined with rhc "
                             "(its output is synthetic)")
        spec = datasets.read_indices(args.selection)
        spec.validate_against(ds.n)
        alpha, beta = args.alpha, args.beta
        params = {}
        if alpha is not None:
            params["alpha"] = alpha
        if beta is not None:
            params["beta"] = beta
        result = ReductionResult(
            algorithm=args.algorithm,
            params=params,
            original_count=ds.n,
            reduction_rate=evaluation.reduction_rate(ds.n, len(spec)),
            synthetic=False,
            subset=spec,
            source=ds.source.describe(),
        )
    else:
        partition = _get_partition(ds, args, timings)
        result, _ = _run_algorithm(ds, partition, args, timings)
    if args.k < 1:
        raise UsageError(f"--k must be positive, got {args.k}")
    report = evaluation.evaluate(ds, result, ds_test, k=args.k,
                                 include_full_baseline=args.full_baseline)
    report["wall_time_per_stage"] = timings
    _emit(report, args.output)
    return 0


def _cmd_calibrate(args) -> int:
    timings = {}
    ds = _load_dataset(args)
    partition = _get_partition(ds, args, timings)
    if args.alpha is None:
        raise UsageError("--alpha is required for calibrate-beta")
    target = args.target_reduction
    if target is None:
        target = evaluation.reduction_rate(ds.n, len(partition.clusters))
    t0 = time.perf_counter()
    outcome = merge.calibrate_beta(ds, partition, args.alpha, target,
                                   tol=args.tolerance)
    timings["calibrate"] = time.perf_counter() - t0
    _emit(
        {
            "alpha": args.alpha,
            "target_reduction": target,
            "tolerance": args.tolerance,
            "beta": outcome.beta,
            "achieved_rate": outcome.reduction_rate,
            "bisection_steps": outcome.steps,
            "converged": outcome.converged,
            "wall_time_per_stage": timings,
        },
        args.output,
    )
    return 0


_COMMANDS = {
    "reduce": _cmd_reduce,
    "stats": _cmd_stats,
    "evaluate": _cmd_evaluate,
    "calibrate-beta": _cmd_calibrate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads is not None and args.threads < 1:
            raise UsageError(f"--threads must be positive, got {args.threads}")
        limits = (
            threadpool_limits(limits=args.threads)
            if args.threads is not None
            else contextlib.nullcontext()
        )
        with limits:
            return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ghcidr: usage error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, DataConsistencyError) as exc:
        print(f"ghcidr: data error: {exc}", file=sys.stderr)
        return 2
    except CalibrationError as exc:
        print(f"ghcidr: calibration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"ghcidr: io error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"ghcidr: usage error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
