import json

import numpy as np
import pytest

from ghcidr.cli import main
from ghcidr.datasets import write_rows_csv
from conftest import blob_dataset, write_cifar_batch, write_idx_pair


@pytest.fixture
def train_csv(tmp_path):
    ds = blob_dataset(seed=80, n_classes=3, per_class=20, spread=2.0)
    path = tmp_path / "train.csv"
    write_rows_csv(ds.features, ds.labels, path)
    return path


@pytest.fixture
def test_csv(tmp_path):
    ds = blob_dataset(seed=81, n_classes=3, per_class=8, spread=2.0)
    path = tmp_path / "test.csv"
    write_rows_csv(ds.features, ds.labels, path)
    return path


@pytest.fixture
def singleton_csv(tmp_path):
    path = tmp_path / "singletons.csv"
    path.write_text("0,0.1,0.1\n1,0.5,0.5\n2,0.9,0.9\n")
    return path


def run(*argv):
    return main(list(argv))


class TestReduce:
    def test_merged_ghcidr_report(self, train_csv, tmp_path):
        out = tmp_path / "report.json"
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "merged-ghcidr", "--alpha", "0.85", "--beta", "0.4",
            "--output", str(out),
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["algorithm"] == "merged-ghcidr"
        assert report["params"] == {"alpha": 0.85, "beta": 0.4}
        assert report["n"] == 60
        assert report["reduced_n"] == len(report["selected_indices"])
        assert report["reduction_rate"] == pytest.approx(
            100.0 * (1 - report["reduced_n"] / report["n"])
        )
        assert set(report["per_class_counts"]) == {"0", "1", "2"}
        assert sum(report["cluster_size_histogram"].values()) >= 1
        assert "wall_time_per_stage" in report

    def test_report_schema(self, train_csv, tmp_path):
        out = tmp_path / "report.json"
        run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "ghcidr", "--alpha", "0.5", "--output", str(out),
        )
        report = json.loads(out.read_text())
        assert set(report) == {
            "algorithm", "params", "n", "reduced_n", "reduction_rate",
            "per_class_counts", "cluster_size_histogram",
            "wall_time_per_stage", "synthetic", "source", "feature_scaling",
            "annulus_membership", "selected_indices",
        }

    def test_missing_alpha_names_the_flag(self, train_csv, tmp_path, capsys):
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "ghcidr", "--output", str(tmp_path / "r.json"),
        )
        assert code == 1
        assert "--alpha" in capsys.readouterr().err

    def test_missing_beta_names_the_flag(self, train_csv, tmp_path, capsys):
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "merged-ghcidr", "--alpha", "0.85",
            "--output", str(tmp_path / "r.json"),
        )
        assert code == 1
        assert "--beta" in capsys.readouterr().err

    def test_indices_output(self, train_csv, tmp_path):
        out = tmp_path / "sel.txt"
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "ghcidr", "--alpha", "0.85",
            "--output", str(out), "--output-format", "indices",
        )
        assert code == 0
        lines = out.read_text().splitlines()
        indices = [int(v) for v in lines]
        assert indices == sorted(set(indices))
        report = json.loads((tmp_path / "sel.txt.report.json").read_text())
        assert report["reduced_n"] == len(indices)

    def test_rhc_rejects_indices_output(self, train_csv, tmp_path, capsys):
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "rhc", "--output", str(tmp_path / "sel.txt"),
            "--output-format", "indices",
        )
        assert code == 1
        assert "synthetic" in capsys.readouterr().err

    def test_rhc_csv_output(self, train_csv, tmp_path):
        out = tmp_path / "centroids.csv"
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "rhc", "--output", str(out),
            "--output-format", "csv",
        )
        assert code == 0
        report = json.loads((tmp_path / "centroids.csv.report.json").read_text())
        assert report["synthetic"] is True
        assert len(out.read_text().splitlines()) == report["reduced_n"]

    def test_preset_fills_parameters(self, train_csv, tmp_path):
        out = tmp_path / "report.json"
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "merged-ghcidr", "--preset", "mnist",
            "--output", str(out),
        )
        assert code == 0
        assert json.loads(out.read_text())["params"] == {
            "alpha": 0.85, "beta": 0.4,
        }

    def test_unreadable_input_is_data_error(self, tmp_path, capsys):
        code = run(
            "reduce", "--input", str(tmp_path / "missing.csv"), "--format",
            "csv", "--algorithm", "rhc", "--output", str(tmp_path / "r.json"),
        )
        assert code == 2

    def test_malformed_csv_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("0,0.1\n1,0.2,0.3\n")
        code = run(
            "reduce", "--input", str(bad), "--format", "csv",
            "--algorithm", "rhc", "--output", str(tmp_path / "r.json"),
        )
        assert code == 2

    def test_invalid_alpha_is_usage_error(self, train_csv, tmp_path):
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "ghcidr", "--alpha", "1.5",
            "--output", str(tmp_path / "r.json"),
        )
        assert code == 1

    def test_unknown_algorithm_is_usage_error(self, train_csv, tmp_path):
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "psc", "--output", str(tmp_path / "r.json"),
        )
        assert code == 1

    def test_corrupt_cache_is_data_error(self, train_csv, tmp_path, capsys):
        cache = tmp_path / "partition.json"
        cache.write_text("{not json")
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "rhc", "--partition-cache", str(cache),
            "--output", str(tmp_path / "r.json"),
        )
        assert code == 2
        assert "JSON" in capsys.readouterr().err

    def test_stale_cache_for_other_dataset_is_data_error(
        self, train_csv, singleton_csv, tmp_path
    ):
        cache = tmp_path / "partition.json"
        assert run(
            "reduce", "--input", str(singleton_csv), "--format", "csv",
            "--algorithm", "rhc", "--partition-cache", str(cache),
            "--output", str(tmp_path / "a.json"),
        ) == 0
        code = run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "rhc", "--partition-cache", str(cache),
            "--output", str(tmp_path / "b.json"),
        )
        assert code == 2

    def test_cache_round_trip_and_report_determinism(self, train_csv, tmp_path):
        cache = tmp_path / "partition.json"
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        for out in (out_a, out_b):
            code = run(
                "reduce", "--input", str(train_csv), "--format", "csv",
                "--algorithm", "ghcidr", "--alpha", "0.85",
                "--partition-cache", str(cache), "--output", str(out),
            )
            assert code == 0
        assert cache.exists()
        report_a = json.loads(out_a.read_text())
        report_b = json.loads(out_b.read_text())
        assert report_a["selected_indices"] == report_b["selected_indices"]
        del report_a["wall_time_per_stage"], report_b["wall_time_per_stage"]
        assert json.dumps(report_a, sort_keys=True) == json.dumps(
            report_b, sort_keys=True
        )


class TestInputFormats:
    def test_idx_pipeline(self, tmp_path):
        rng = np.random.default_rng(88)
        images = rng.integers(0, 256, size=(40, 4, 4), dtype=np.uint8)
        labels = rng.integers(0, 3, size=40)
        ip, lp = write_idx_pair(tmp_path, images, labels)
        out = tmp_path / "report.json"
        code = run(
            "reduce", "--input", str(ip), "--labels", str(lp),
            "--format", "idx", "--algorithm", "ghcidr", "--alpha", "0.5",
            "--output", str(out),
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["n"] == 40
        assert report["feature_scaling"] == "divide-by-255"

    def test_idx_requires_labels_flag(self, tmp_path, capsys):
        rng = np.random.default_rng(88)
        ip, _ = write_idx_pair(
            tmp_path, rng.integers(0, 256, (4, 2, 2), dtype=np.uint8), [0, 1, 0, 1]
        )
        code = run(
            "reduce", "--input", str(ip), "--format", "idx",
            "--algorithm", "rhc", "--output", str(tmp_path / "r.json"),
        )
        assert code == 1
        assert "--labels" in capsys.readouterr().err

    def test_cifar_batches(self, tmp_path):
        rng = np.random.default_rng(89)
        p1 = write_cifar_batch(
            tmp_path, rng.integers(0, 10, 12), rng.integers(0, 256, (12, 3072)),
            "b1.bin",
        )
        p2 = write_cifar_batch(
            tmp_path, rng.integers(0, 10, 8), rng.integers(0, 256, (8, 3072)),
            "b2.bin",
        )
        out = tmp_path / "report.json"
        code = run(
            "reduce", "--input", str(p1), "--input", str(p2),
            "--format", "cifar10", "--algorithm", "rhc",
            "--output", str(out),
        )
        assert code == 0
        assert json.loads(out.read_text())["n"] == 20

    def test_cifar_num_classes_override_rejected(self, tmp_path, capsys):
        p1 = write_cifar_batch(tmp_path, [1], np.zeros((1, 3072)))
        code = run(
            "reduce", "--input", str(p1), "--format", "cifar10",
            "--algorithm", "rhc", "--num-classes", "5",
            "--output", str(tmp_path / "r.json"),
        )
        assert code == 1
        assert "--num-classes" in capsys.readouterr().err

    def test_threads_flag_does_not_change_selection(self, train_csv, tmp_path):
        outputs = []
        for name, extra in (("a.json", []), ("b.json", ["--threads", "1"])):
            out = tmp_path / name
            assert run(
                "reduce", "--input", str(train_csv), "--format", "csv",
                "--algorithm", "ghcidr", "--alpha", "0.85",
                "--output", str(out), *extra,
            ) == 0
            outputs.append(json.loads(out.read_text())["selected_indices"])
        assert outputs[0] == outputs[1]


class TestStats:
    def test_three_singletons(self, singleton_csv, tmp_path):
        out = tmp_path / "stats.json"
        code = run(
            "stats", "--input", str(singleton_csv), "--format", "csv",
            "--output", str(out),
        )
        assert code == 0
        stats = json.loads(out.read_text())
        assert stats["histogram"] == {"1": 3}
        assert stats["n_clusters"] == 3

    def test_stdout_when_no_output(self, singleton_csv, capsys):
        assert run("stats", "--input", str(singleton_csv), "--format", "csv") == 0
        assert '"histogram"' in capsys.readouterr().out


class TestEvaluate:
    def test_recompute_path(self, train_csv, test_csv, tmp_path):
        out = tmp_path / "eval.json"
        code = run(
            "evaluate", "--input", str(train_csv), "--format", "csv",
            "--test-input", str(test_csv), "--test-format", "csv",
            "--algorithm", "ghcidr", "--alpha", "0.85", "--k", "1",
            "--output", str(out),
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert 0.0 <= report["knn_proxy_accuracy"] <= 100.0
        assert report["n_test"] == 24

    def test_selection_reuse_path(self, train_csv, test_csv, tmp_path):
        selection = tmp_path / "sel.txt"
        run(
            "reduce", "--input", str(train_csv), "--format", "csv",
            "--algorithm", "ghcidr", "--alpha", "0.85",
            "--output", str(selection), "--output-format", "indices",
        )
        out = tmp_path / "eval.json"
        code = run(
            "evaluate", "--input", str(train_csv), "--format", "csv",
            "--test-input", str(test_csv), "--test-format", "csv",
            "--algorithm", "ghcidr", "--selection", str(selection),
            "--output", str(out),
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["n_reduced"] == len(selection.read_text().splitlines())

    def test_full_baseline_flag(self, train_csv, test_csv, tmp_path):
        out = tmp_path / "eval.json"
        code = run(
            "evaluate", "--input", str(train_csv), "--format", "csv",
            "--test-input", str(test_csv), "--test-format", "csv",
            "--algorithm", "rhc", "--full-baseline", "--output", str(out),
        )
        assert code == 0
        assert "full_knn_accuracy" in json.loads(out.read_text())


class TestCalibrate:
    def test_default_target_is_rhc_rate(self, train_csv, tmp_path):
        out = tmp_path / "cal.json"
        code = run(
            "calibrate-beta", "--input", str(train_csv), "--format", "csv",
            "--alpha", "0.85", "--tolerance", "1.0", "--output", str(out),
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert 0.0 < report["beta"] <= 1.0
        assert report["bisection_steps"] <= 25

    def test_unreachable_target_is_data_error(self, train_csv, tmp_path, capsys):
        code = run(
            "calibrate-beta", "--input", str(train_csv), "--format", "csv",
            "--alpha", "0.85", "--target-reduction", "99.9",
            "--output", str(tmp_path / "cal.json"),
        )
        assert code == 2
        assert "achievable" in capsys.readouterr().err
