"""
Cluster-then-prune baseline (devToMean)
k-means splits the data into small clusters; points whose distance to their
centroid is at most the cluster's mean distance times the threshold are
treated as normal and pruned before LOF runs on the rest.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config import Config
from scoring.kmeans import ClusterModel, kmeans
from scoring.lof import lof_subset, validate_minpts
from scoring.neighbors import NeighborIndex, build_index
from scoring.points import InputError, PointSet, ScoreVector, pair_distances

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DevToMeanResult:
    scores: ScoreVector
    values: np.ndarray
    kept: np.ndarray
    model: ClusterModel

    @property
    def prune_rate(self) -> float:
        return float(1.0 - self.kept.mean())


def default_cluster_count(n: int) -> int:
    return max(1, math.ceil(math.sqrt(n)))


def devtomean_values(data: PointSet, model: ClusterModel) -> np.ndarray:
    """d(p, centroid) / mean member distance to that centroid; 0/0 is 0"""
    extended = np.vstack([data.points, model.centroids])
    centroid_rows = data.n + model.assignment
    distances = pair_distances(extended, np.arange(data.n), centroid_rows)

    counts = np.bincount(model.assignment, minlength=model.cluster_count)
    totals = np.bincount(model.assignment, weights=distances, minlength=model.cluster_count)
    means = np.divide(totals, counts, out=np.zeros_like(totals), where=counts > 0)

    point_means = means[model.assignment]
    return np.divide(distances, point_means, out=np.zeros_like(distances), where=point_means > 0)


def devtomean_run(data: PointSet, minpts: int = Config.DEFAULT_MINPTS,
                  cluster_count: Optional[int] = None,
                  prune_threshold: float = Config.DEFAULT_DEVTOMEAN_THRESHOLD,
                  seed: int = Config.DEFAULT_SEED, backend: str = Config.DEFAULT_BACKEND,
                  index: Optional[NeighborIndex] = None) -> DevToMeanResult:
    minpts = validate_minpts(minpts, data.n)
    if prune_threshold < 0 or not math.isfinite(prune_threshold):
        raise InputError(f"Prune threshold must be a finite value >= 0, got {prune_threshold}")
    if cluster_count is None:
        cluster_count = default_cluster_count(data.n)

    model = kmeans(data, cluster_count, seed=seed)
    values = devtomean_values(data, model)
    # threshold 0 switches pruning off
    if prune_threshold > 0:
        kept = values > prune_threshold
    else:
        kept = np.ones(data.n, dtype=bool)
    kept.setflags(write=False)

    index = index if index is not None else build_index(data, backend)
    profiles = index.profiles(minpts)
    scores = np.zeros(data.n)
    kept_ids = np.flatnonzero(kept)
    if kept_ids.size:
        scores[kept_ids] = lof_subset(profiles, kept_ids, minpts)

    logger.debug(f"devToMean kept {kept_ids.size}/{data.n} points over {model.cluster_count} clusters")
    return DevToMeanResult(scores=ScoreVector(scores), values=values, kept=kept, model=model)


def devtomean_scores(data: PointSet, minpts: int = Config.DEFAULT_MINPTS,
                     cluster_count: Optional[int] = None,
                     prune_threshold: float = Config.DEFAULT_DEVTOMEAN_THRESHOLD,
                     seed: int = Config.DEFAULT_SEED,
                     backend: str = Config.DEFAULT_BACKEND) -> ScoreVector:
    return devtomean_run(data, minpts, cluster_count=cluster_count,
                         prune_threshold=prune_threshold, seed=seed, backend=backend).scores
