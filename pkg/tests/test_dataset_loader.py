"""
Tests for dataset spec files, CSV loading, standardization and synthetic data
"""

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

import numpy as np
import pandas as pd
import pytest

from scoring.points import InputError
from services.dataset_loader import (
    DatasetError, DatasetSpec, load_csv, load_dataset, read_spec_file, split_list, standardize,
)
from services.synthetic_data import SyntheticSpec, make_synthetic, write_synthetic

FIXTURES = Path(__file__).parent / "fixtures"
CONFIGS = Path(__file__).parent.parent / "configs" / "datasets"


def write_lines(path: Path, lines):
    path.write_text("\n".join(lines) + "\n")
    return path


class TestLoadCsv:

    def test_label_mapping(self, tmp_path):
        path = write_lines(tmp_path / "abc.csv", ["1.0,2.0,a", "3.0,4.0,b", "5.0,6.0,a"])
        dataset = load_csv(DatasetSpec(name="abc", path=str(path), outlier_classes="b"))
        assert dataset.truth.labels.tolist() == [False, True, False]
        assert dataset.data.points.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]
        print("✓ Labels {a, b, a} with outlier class b map to {0, 1, 0}")

    def test_rows_equal_file_rows(self, tmp_path):
        rng = np.random.default_rng(0)
        values = rng.normal(size=(30, 4)) * 1e3
        lines = [",".join(repr(float(v)) for v in row) + ",x" for row in values]
        lines[7] = lines[7][:-1] + "y"
        path = write_lines(tmp_path / "exact.csv", lines)
        dataset = load_csv(DatasetSpec(name="exact", path=str(path), outlier_classes=["y"]))
        assert np.array_equal(dataset.data.points, values)
        assert dataset.truth.labels.tolist() == [i == 7 for i in range(30)]

    def test_header_fixture(self):
        dataset = load_dataset(FIXTURES / "small_labeled.env")
        assert dataset.name == "SmallLabeled"
        assert dataset.data.n == 20
        assert dataset.data.m == 3
        assert dataset.feature_names == ["width", "height", "depth"]
        assert np.flatnonzero(dataset.truth.labels).tolist() == [15, 18]

    def test_missing_token_rows_dropped(self):
        dataset = load_dataset(FIXTURES / "small_missing.env")
        assert dataset.data.n == 24
        assert dataset.data.m == 9
        assert dataset.truth.n_outliers == 7

    def test_parse_failure_names_row_and_column(self, tmp_path):
        path = write_lines(tmp_path / "bad.csv", ["1,2,a", "3,oops,a", "5,6,b"])
        with pytest.raises(DatasetError, match=r"Row 2, column '1'"):
            load_csv(DatasetSpec(name="bad", path=str(path), outlier_classes="b"))

    def test_missing_label_column(self, tmp_path):
        path = write_lines(tmp_path / "h.csv", ["x,y,label", "1,2,a", "3,4,b"])
        with pytest.raises(DatasetError, match="Label column"):
            load_csv(DatasetSpec(name="h", path=str(path), header=True,
                                 label_column="class", outlier_classes="b"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            load_csv(DatasetSpec(name="none", path=str(tmp_path / "nope.csv"), outlier_classes="b"))

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            DatasetSpec(name="x", path="x.csv", outlier_classes="")
        with pytest.raises(ValueError):
            DatasetSpec(name="x", path="x.csv", outlier_classes="a", normal_classes="a,b")

    def test_wine_shaped_file(self, tmp_path):
        """Class 1 limited to its first 10 rows, classes 2 and 3 merged as normal"""
        rng = np.random.default_rng(1)
        classes = [1] * 59 + [2] * 71 + [3] * 48
        lines = [f"{c}," + ",".join(f"{v:.3f}" for v in rng.uniform(0, 10, size=13)) for c in classes]
        write_lines(tmp_path / "wine.data", lines)
        recipe = (CONFIGS / "wine.env").read_text().replace("../../data/wine.data", "wine.data")
        (tmp_path / "wine.env").write_text(recipe)

        dataset = load_dataset(tmp_path / "wine.env")
        assert dataset.data.n == 129
        assert dataset.data.m == 13
        assert dataset.truth.n_outliers == 10
        assert np.flatnonzero(dataset.truth.labels).tolist() == list(range(10))
        print("✓ Wine recipe yields N=129, m=13, 10 outliers")

    def test_limits_keep_first_rows_in_file_order(self, tmp_path):
        lines = [f"{i}.0,{'o' if i % 3 == 0 else 'n'}" for i in range(30)]
        path = write_lines(tmp_path / "lim.csv", lines)
        dataset = load_csv(DatasetSpec(name="lim", path=str(path), outlier_classes="o",
                                       normal_limit=5, outlier_limit=2))
        assert dataset.data.points[:, 0].tolist() == [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0]
        assert dataset.truth.labels.tolist() == [True, False, False, True, False, False, False]


class TestStandardize:

    def test_zero_mean_unit_sd(self):
        points = np.random.default_rng(2).normal(5.0, 3.0, size=(100, 4))
        result = standardize(points)
        assert np.all(np.abs(result.mean(axis=0)) <= 1e-9)
        assert np.all(np.abs(result.std(axis=0) - 1.0) <= 1e-9)

    def test_constant_column_becomes_zeros(self):
        points = np.column_stack([np.full(10, 7.0), np.arange(10.0)])
        result = standardize(points)
        assert np.all(result[:, 0] == 0.0)
        assert not np.isnan(result).any()

    def test_spec_flag(self, tmp_path):
        path = write_lines(tmp_path / "s.csv", ["1,5,a", "2,5,a", "3,5,b"])
        dataset = load_csv(DatasetSpec(name="s", path=str(path), outlier_classes="b", standardize=True))
        assert np.all(dataset.data.points[:, 1] == 0.0)
        assert abs(dataset.data.points[:, 0].mean()) <= 1e-12


class TestSpecFiles:

    def test_every_shipped_recipe_parses(self):
        for path in sorted(CONFIGS.glob("*.env")):
            spec = read_spec_file(path)
            assert spec.name
            if isinstance(spec, DatasetSpec):
                assert spec.outlier_classes
                assert Path(spec.path).parent.name == "data"

    def test_relative_path_resolved_against_spec(self):
        spec = read_spec_file(FIXTURES / "small_labeled.env")
        assert Path(spec.path) == FIXTURES / "small_labeled.csv"

    def test_synthetic_kind(self):
        spec = read_spec_file(FIXTURES / "small_synthetic.env")
        assert isinstance(spec, SyntheticSpec)
        assert spec.n_inliers == 80 and spec.n_outliers == 6

    def test_unknown_kind(self, tmp_path):
        (tmp_path / "x.env").write_text("KIND=arff\nPATH=x.arff\n")
        with pytest.raises(DatasetError):
            read_spec_file(tmp_path / "x.env")


class TestSynthetic:

    def test_deterministic(self):
        spec = SyntheticSpec(n_inliers=200, n_outliers=10, seed=5)
        first_data, first_truth = make_synthetic(spec)
        second_data, second_truth = make_synthetic(spec)
        assert np.array_equal(first_data.points, second_data.points)
        assert np.array_equal(first_truth.labels, second_truth.labels)

    def test_sizes(self):
        data, truth = make_synthetic(SyntheticSpec(n_inliers=120, n_outliers=8, m=5, cluster_count=3))
        assert data.n == 128 and data.m == 5
        assert truth.n_outliers == 8

    def test_outliers_are_isolated(self):
        data, truth = make_synthetic(SyntheticSpec(n_inliers=200, n_outliers=10, cluster_count=2, seed=1))
        points = data.points
        dist = np.sqrt(((points[:, None, :] - points[None, :, :]) ** 2).sum(axis=2))
        np.fill_diagonal(dist, np.inf)
        nearest = dist.min(axis=1)
        assert nearest[truth.labels].mean() > nearest[~truth.labels].mean()

    def test_crowded_box_rejected(self):
        with pytest.raises(InputError):
            make_synthetic(SyntheticSpec(n_inliers=100, n_outliers=5, m=1, cluster_count=1, outlier_clearance=50.0))

    def test_no_outlier_near_a_cluster_core(self):
        data, truth = make_synthetic(SyntheticSpec(n_inliers=400, n_outliers=40, cluster_count=1,
                                                   outlier_clearance=3.0, seed=6))
        center = data.points[~truth.labels].mean(axis=0)
        gap = np.linalg.norm(data.points[truth.labels] - center, axis=1)
        assert gap.min() > 2.5

    def test_invalid_sizes(self):
        with pytest.raises(InputError):
            SyntheticSpec(n_inliers=100, n_outliers=0)
        with pytest.raises(InputError):
            SyntheticSpec(n_inliers=10, n_outliers=10)
        with pytest.raises(InputError):
            SyntheticSpec(cluster_spread=-1.0)

    def test_default_outliers_fill_the_whole_box(self):
        """No clearance by default: outliers are plain uniform draws from the scaled box"""
        spec = SyntheticSpec(n_inliers=300, n_outliers=200, cluster_count=1, seed=4)
        data, truth = make_synthetic(spec)
        inliers = data.points[~truth.labels]
        center = inliers.mean(axis=0)
        gap = np.linalg.norm(data.points[truth.labels] - center, axis=1)
        assert gap.min() < 2.0
        middle = (inliers.min(axis=0) + inliers.max(axis=0)) / 2.0
        half = (inliers.max(axis=0) - inliers.min(axis=0)) / 2.0 * spec.outlier_box_scale
        assert np.all(np.abs(data.points[truth.labels] - middle) <= half + 1e-9)

    def test_comma_lists(self):
        assert split_list(" a, b,,c ") == ["a", "b", "c"]
        assert split_list(None) == []
        assert split_list([1, " x "]) == ["1", "x"]

    def test_written_file_reloads(self, tmp_path):
        spec = SyntheticSpec(n_inliers=50, n_outliers=5, m=3, seed=2)
        path = write_synthetic(spec, tmp_path / "synth.csv")
        frame = pd.read_csv(path, float_precision="round_trip")
        assert list(frame.columns) == ["x0", "x1", "x2", "label"]
        data, truth = make_synthetic(spec)
        assert np.array_equal(frame[["x0", "x1", "x2"]].to_numpy(), data.points)
        assert (frame["label"] == "outlier").sum() == 5
