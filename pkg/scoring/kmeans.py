"""
Seeded k-means clustering used by the devToMean baseline
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from config import Config
from scoring.points import InputError, PointSet, pairwise_squared

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ClusterModel:
    centroids: np.ndarray
    assignment: np.ndarray
    seed: int
    iterations: int
    inertia_history: List[float] = field(default_factory=list)

    @property
    def cluster_count(self) -> int:
        return self.centroids.shape[0]

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == cluster)


def _assign(points: np.ndarray, centroids: np.ndarray):
    squared = pairwise_squared(points, centroids)
    assignment = np.argmin(squared, axis=1)
    inertia = float(squared[np.arange(points.shape[0]), assignment].sum())
    return assignment, inertia


def _update(points: np.ndarray, assignment: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    updated = centroids.copy()
    for c in range(centroids.shape[0]):
        members = assignment == c
        # an empty cluster keeps its previous centroid
        if members.any():
            updated[c] = points[members].mean(axis=0)
    return updated


def kmeans(data: PointSet, cluster_count: int, seed: int = Config.DEFAULT_SEED,
           max_iters: int = Config.KMEANS_MAX_ITERS) -> ClusterModel:
    """
    Lloyd iterations from cluster_count distinct random rows. Stops when the
    assignment no longer changes or after max_iters updates.
    """
    if isinstance(cluster_count, bool) or not isinstance(cluster_count, (int, np.integer)):
        raise InputError(f"Cluster count must be an integer, got {cluster_count!r}")
    if not 1 <= cluster_count <= data.n:
        raise InputError(f"Cluster count must be in [1, {data.n}], got {cluster_count}")
    if max_iters < 1:
        raise InputError(f"max_iters must be positive, got {max_iters}")

    points = data.points
    rng = np.random.default_rng(seed)
    centroids = points[rng.choice(data.n, size=int(cluster_count), replace=False)].copy()
    assignment, inertia = _assign(points, centroids)
    history = [inertia]

    iterations = 0
    converged = False
    while iterations < max_iters:
        centroids = _update(points, assignment, centroids)
        iterations += 1
        updated, inertia = _assign(points, centroids)
        history.append(inertia)
        if np.array_equal(updated, assignment):
            converged = True
            break
        assignment = updated

    if not converged:
        logger.debug(f"k-means stopped at max_iters={max_iters} before converging")

    assignment.setflags(write=False)
    centroids.setflags(write=False)
    return ClusterModel(centroids=centroids, assignment=assignment, seed=seed,
                        iterations=iterations, inertia_history=history)
