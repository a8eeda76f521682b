"""
Tests for delta density, median pruning and pruned LOF scoring
"""

import sys
from pathlib import Path
sys.path.append(str(Path(__file__).parent.parent))

import itertools

import numpy as np
import pytest

from scoring.lof import lof_all
from scoring.neighbors import NeighborIndex
from scoring.plof import (
    HIGH_DELTA, LOW_DELTA, delta_density, delta_vector, plof_run, plof_scores, prune_mask, prune_rate,
)
from scoring.points import ContractError, InputError, PointSet
from test_lof import fuzz_corpus


class TestDeltaDensity:

    def test_unit_spaced_neighbors(self):
        data = PointSet([[0.0], [1.0], [-1.0], [5.0], [9.0]])
        profiles = NeighborIndex(data).profiles(2)
        assert delta_density(profiles, 0, 2) == 2.0
        print("✓ delta = 4 / 2 for neighbors at distances {1, 1}")

    def test_isolated_point(self):
        data = PointSet([[0.0], [9.0], [10.0], [30.0], [31.0], [32.0]])
        profiles = NeighborIndex(data).profiles(2)
        assert delta_density(profiles, 0, 2) == pytest.approx(4.0 / 19.0)

    def test_ties_grow_the_neighborhood(self):
        square = PointSet([[0, 0], [1, 0], [0, 1], [-1, 0], [0, -1], [5, 5]])
        profiles = NeighborIndex(square).profiles(2)
        # |M| = 4 at distance 1 each
        assert delta_density(profiles, 0, 2) == 16.0 / 4.0

    def test_duplicates_are_infinitely_dense(self):
        data = PointSet([[0.0], [0.0], [0.0], [4.0], [7.0]])
        profiles = NeighborIndex(data).profiles(2)
        assert delta_density(profiles, 0, 2) == np.inf

    def test_vector_matches_single_point(self):
        rng = np.random.default_rng(3)
        profiles = NeighborIndex(PointSet(rng.normal(size=(120, 4)))).profiles(6)
        vector = delta_vector(profiles)
        for p in range(120):
            assert vector[p] == delta_density(profiles, p, 6)

    def test_dense_points_beat_far_outlier(self):
        rng = np.random.default_rng(9)
        points = np.vstack([rng.normal(size=(49, 2)), [[15.0, -15.0]]])
        deltas = delta_vector(NeighborIndex(PointSet(points)).profiles(5))
        core = np.linalg.norm(points[:49], axis=1) < 1.0
        assert np.all(deltas[:49][core] > deltas[49])

    def test_wrong_k(self):
        profiles = NeighborIndex(PointSet(np.arange(10.0)[:, None])).profiles(3)
        with pytest.raises(ContractError):
            delta_density(profiles, 0, 4)


class TestPruneMask:

    def test_five_values(self):
        mask = prune_mask(np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
        assert mask.median_delta == 3.0
        assert mask.eliminated_extremes == (0, 4)
        assert mask.kept.tolist() == [True, True, True, False, False]
        assert prune_rate(mask) == pytest.approx(0.4)
        print("✓ {1..5}: median 3, points with delta 4 and 5 pruned")

    def test_extremes_still_classified(self):
        mask = prune_mask(np.array([5.0, 1.0, 3.0, 2.0, 4.0]))
        assert mask.eliminated_extremes == (1, 0)
        assert not mask.kept[0]
        assert mask.kept[1]

    def test_all_equal(self):
        mask = prune_mask(np.full(9, 2.5))
        assert mask.kept.all()
        assert prune_rate(mask) == 0.0
        assert mask.eliminated_extremes[0] != mask.eliminated_extremes[1]

    def test_infinity_is_eliminated_maximum(self):
        deltas = np.array([1.0, np.inf, 2.0, 3.0, 4.0, 5.0])
        mask = prune_mask(deltas)
        assert mask.eliminated_extremes == (0, 1)
        assert mask.median_delta == 3.5
        assert not mask.kept[1]

    def test_even_count_median_is_midpoint(self):
        mask = prune_mask(np.array([10.0, 1.0, 2.0, 3.0, 4.0, 0.0]))
        assert mask.median_delta == 2.5

    def test_low_delta_rule(self):
        mask = prune_mask(np.array([1.0, 2.0, 3.0, 4.0, 5.0]), rule=LOW_DELTA)
        assert mask.kept.tolist() == [False, False, True, True, True]
        assert mask.rule == LOW_DELTA

    def test_prune_direction_invariant(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            deltas = rng.exponential(size=int(rng.integers(5, 400)))
            mask = prune_mask(deltas)
            assert np.all(deltas[~mask.kept] > mask.median_delta)
            assert np.all(deltas[mask.kept] <= mask.median_delta)

    def test_distinct_deltas_prune_about_half(self):
        rng = np.random.default_rng(1)
        for n in (101, 500, 2000):
            mask = prune_mask(rng.permutation(np.arange(1, n + 1, dtype=float)))
            assert abs(prune_rate(mask) - 0.5) <= 3.0 / n

    def test_too_few_values(self):
        with pytest.raises(InputError):
            prune_mask(np.array([1.0, 2.0, 3.0, 4.0]))

    def test_unknown_rule(self):
        with pytest.raises(InputError):
            prune_mask(np.arange(1.0, 8.0), rule="median")


class TestPlofScores:

    def test_kept_scores_equal_full_lof(self):
        """Fuzz corpus: kept points carry their full-LOF score, pruned points exactly 0"""
        for trial, points, minpts in fuzz_corpus(200):
            data = PointSet(points)
            full = lof_all(data, minpts).scores
            result = plof_run(data, minpts)
            kept = result.mask.kept
            scores = result.scores.scores
            assert np.array_equal(scores[kept], full[kept]), f"trial {trial}"
            assert np.all(scores[~kept] == 0.0), f"trial {trial}"
            assert np.all(scores[kept] > 0.0), f"trial {trial}"
        print("✓ PLOF preserves full-LOF scores of every kept point on 200 fuzzed sets")

    def test_planted_outliers_survive(self):
        rng = np.random.default_rng(42)
        clusters = np.vstack([rng.normal(0.0, 0.5, size=(23, 2)), rng.normal(6.0, 0.5, size=(22, 2))])
        outliers = np.array([[20.0, 20.0], [-15.0, 10.0], [15.0, -12.0], [-18.0, -18.0], [3.0, 25.0]])
        data = PointSet(np.vstack([clusters, outliers]))
        full = lof_all(data, 5).scores
        result = plof_run(data, 5)
        scores = result.scores.scores
        assert np.array_equal(scores[45:], full[45:])
        assert np.all(scores[45:] > 1.0)
        assert np.mean(scores[:45] == 0.0) >= 0.45

    def test_hypercube_has_equal_deltas(self):
        cube = np.array(list(itertools.product([0.0, 1.0], repeat=4)))
        data = PointSet(cube)
        result = plof_run(data, 4)
        assert np.all(result.deltas == result.deltas[0])
        assert result.prune_rate == 0.0
        assert np.array_equal(result.scores.scores, lof_all(data, 4).scores)
        print("✓ All-equal deltas: nothing pruned and PLOF == LOF")

    def test_minimum_size(self):
        data = PointSet([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 3.0], [9.0, 1.0]])
        result = plof_run(data, 2)
        assert len(result.scores) == 5
        assert result.mask.n_kept >= 1
        with pytest.raises(InputError):
            plof_run(PointSet(data.points[:4]), 2)

    def test_lrd_evaluations_limited_to_demand(self):
        rng = np.random.default_rng(5)
        data = PointSet(rng.normal(size=(400, 2)))
        result = plof_run(data, 10)
        assert 0 < result.lrd_evaluations <= data.n
        assert result.lrd_evaluations >= result.mask.n_kept

    def test_workers_and_backend_do_not_change_scores(self):
        rng = np.random.default_rng(6)
        data = PointSet(rng.normal(size=(700, 3)))
        base = plof_scores(data, 8).scores
        assert np.array_equal(plof_run(data, 8, workers=3).scores.scores, base)
        assert np.array_equal(plof_scores(data, 8, backend="tree").scores, base)

    def test_low_delta_rule_keeps_dense_points(self):
        rng = np.random.default_rng(8)
        data = PointSet(rng.normal(size=(100, 2)))
        high = plof_run(data, 5, prune_rule=HIGH_DELTA)
        low = plof_run(data, 5, prune_rule=LOW_DELTA)
        both = high.mask.kept & low.mask.kept
        assert np.all(high.deltas[both] == high.mask.median_delta)
        assert np.array_equal(low.scores.scores[low.mask.kept], lof_all(data, 5).scores[low.mask.kept])
