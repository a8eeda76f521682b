"""
Benchmark-level checks on synthetic data: PLOF runs faster than LOF, detects
outliers at least as well, and keeps the planted outliers out of the pruned set
"""

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

import gc
import time

import numpy as np
import pytest

from scoring.lof import lof_all
from scoring.neighbors import build_index
from scoring.plof import plof_run
from services.evaluation import roc_auc
from services.synthetic_data import SyntheticSpec, make_synthetic

SEEDS = range(5)

# outlier box scale for the detection checks; outliers keep the default zero clearance
BOX_SCALE = 5.0


def timed(fn):
    gc.collect()
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


@pytest.fixture(scope="module")
def large_set():
    data, _ = make_synthetic(SyntheticSpec(n_inliers=4750, n_outliers=250, m=8, seed=0))
    return data


@pytest.fixture(scope="module")
def benchmark_runs():
    runs = []
    for seed in SEEDS:
        data, truth = make_synthetic(
            SyntheticSpec(n_inliers=950, n_outliers=50, outlier_box_scale=BOX_SCALE, seed=seed))
        runs.append((truth, lof_all(data, 10), plof_run(data, 10)))
    return runs


class TestSpeed:

    def test_plof_mean_wall_time_below_lof(self, large_set):
        plof_times, lof_times = [], []
        # detectors alternate within each repetition
        for _ in range(5):
            lof_times.append(timed(lambda: lof_all(large_set, 10, backend="brute")))
            plof_times.append(timed(lambda: plof_run(large_set, 10, backend="brute")))
        print(f"✓ mean wall time: PLOF {np.mean(plof_times):.3f}s, LOF {np.mean(lof_times):.3f}s")
        assert np.mean(plof_times) < np.mean(lof_times)

    def test_scoring_phase_on_shared_index(self, large_set):
        index = build_index(large_set, "brute")
        index.profiles(10)
        lof_time = min(timed(lambda: lof_all(large_set, 10, index=index)) for _ in range(3))
        plof_time = min(timed(lambda: plof_run(large_set, 10, index=index)) for _ in range(3))
        assert plof_time < lof_time

    def test_fewer_density_evaluations(self, large_set):
        result = plof_run(large_set, 10)
        assert result.lrd_evaluations < large_set.n
        assert result.mask.n_kept <= large_set.n // 2 + 2


class TestDetection:

    def test_auc_of_both_detectors(self, benchmark_runs):
        lof_auc = np.mean([roc_auc(lof, truth) for truth, lof, _ in benchmark_runs])
        plof_auc = np.mean([roc_auc(plof.scores, truth) for truth, _, plof in benchmark_runs])
        print(f"✓ mean AUC over 5 seeds: PLOF {plof_auc:.3f}, LOF {lof_auc:.3f}")
        assert lof_auc >= 0.90
        assert plof_auc >= 0.90
        assert plof_auc >= lof_auc - 0.02

    def test_outliers_rarely_pruned(self, benchmark_runs):
        for truth, _, plof in benchmark_runs:
            pruned = ~plof.mask.kept & truth.labels
            assert pruned.sum() / truth.n_outliers <= 0.05

    def test_kept_scores_match_lof(self, benchmark_runs):
        for _, lof, plof in benchmark_runs:
            kept = plof.mask.kept
            assert np.array_equal(plof.scores.scores[kept], lof.scores[kept])
