"""
Local Outlier Factor
Reachability distance, local reachability density (LRD) and the LOF score,
computed lazily so callers can score any subset of points.
"""

import logging
from typing import Iterable, Optional

import numpy as np

from config import Config
from scoring.neighbors import NeighborIndex, ProfileCache, build_index
from scoring.points import ContractError, InputError, PointSet, ScoreVector

logger = logging.getLogger(__name__)


def validate_minpts(minpts, n: int) -> int:
    if isinstance(minpts, (bool, np.bool_)) or not isinstance(minpts, (int, np.integer)):
        raise InputError(f"MinPts must be an integer, got {minpts!r}")
    if not 1 <= minpts <= n - 1:
        raise InputError(f"MinPts must be in [1, {n - 1}] for N={n}, got {minpts}")
    return int(minpts)


def _check_profiles(profiles: ProfileCache, minpts: int):
    if profiles.k != minpts:
        raise ContractError(f"Profiles were computed for k={profiles.k}, not MinPts={minpts}")


def reach_dist(profiles: ProfileCache, p: int, o: int) -> float:
    """max(k-distance(o), d(p, o))"""
    if p == o:
        raise InputError("Reachability distance needs two different points")
    return max(float(profiles.k_distance[o]), profiles.distance(p, o))


def lrd(profiles: ProfileCache, p: int, minpts: int) -> float:
    """
    |N(p)| / sum of reach-dist(p, o) over the tie-inclusive neighborhood N(p).
    Infinite when every neighbor is a duplicate of p with zero k-distance.
    """
    _check_profiles(profiles, minpts)
    start, stop = profiles.offsets[p], profiles.offsets[p + 1]
    neighbors = profiles.neighbor_ids[start:stop]
    reach = np.maximum(profiles.k_distance[neighbors], profiles.neighbor_distances[start:stop])
    total = reach.sum()
    if total == 0.0:
        return np.inf
    return (stop - start) / total


class LrdCache:
    """
    Local reachability densities filled on demand. NaN marks a missing entry
    since a real LRD is always positive or +inf.
    """

    def __init__(self, profiles: ProfileCache):
        self.profiles = profiles
        self.values = np.full(profiles.n, np.nan)
        self.computed = 0

    def __contains__(self, p) -> bool:
        return not np.isnan(self.values[p])

    def __getitem__(self, p) -> float:
        value = self.values[p]
        if np.isnan(value):
            raise ContractError(f"LRD of point {p} was requested before it was computed")
        return float(value)

    def ensure(self, ids: Iterable[int]):
        """Fill every missing entry for ids; call before scoring, which only reads"""
        values = self.values
        k = self.profiles.k
        for p in ids:
            if values[p] != values[p]:
                values[p] = lrd(self.profiles, p, k)
                self.computed += 1


def lof_score(profiles: ProfileCache, lrd_cache: LrdCache, p: int, minpts: int) -> float:
    """
    Mean of lrd(o) / lrd(p) over N(p), with finite/inf = 0, inf/inf = 1 and
    inf/finite = inf
    """
    _check_profiles(profiles, minpts)
    neighbors = profiles.neighbors(p)
    lrd_p = lrd_cache[p]
    lrd_o = lrd_cache.values[neighbors]
    if np.isnan(lrd_o).any():
        missing = neighbors[np.isnan(lrd_o)][0]
        raise ContractError(f"LRD of neighbor {missing} of point {p} is missing from the cache")

    if lrd_p == np.inf:
        ratios = np.where(lrd_o == np.inf, 1.0, 0.0)
    else:
        ratios = lrd_o / lrd_p
    return float(ratios.sum() / neighbors.size)


def demand_set(profiles: ProfileCache, ids: np.ndarray) -> np.ndarray:
    """Points whose LRD is needed to score ids: the ids plus all their neighbors"""
    ids = np.asarray(ids, dtype=np.int64)
    sizes = profiles.sizes[ids]
    starts = profiles.offsets[ids]
    positions = np.repeat(starts - np.cumsum(sizes) + sizes, sizes) + np.arange(sizes.sum())
    needed = np.zeros(profiles.n, dtype=bool)
    needed[ids] = True
    needed[profiles.neighbor_ids[positions]] = True
    return np.flatnonzero(needed)


def lof_subset(profiles: ProfileCache, ids: Iterable[int], minpts: int,
               lrd_cache: Optional[LrdCache] = None) -> np.ndarray:
    """LOF scores for the requested ids only; other points only feed LRDs"""
    _check_profiles(profiles, minpts)
    ids = np.asarray(ids if isinstance(ids, np.ndarray) else list(ids), dtype=np.int64)
    cache = lrd_cache if lrd_cache is not None else LrdCache(profiles)
    cache.ensure(demand_set(profiles, ids))
    return np.array([lof_score(profiles, cache, int(p), minpts) for p in ids], dtype=np.float64)


def lof_all(data: PointSet, minpts: int = Config.DEFAULT_MINPTS,
            backend: str = Config.DEFAULT_BACKEND,
            index: Optional[NeighborIndex] = None, workers: int = 1) -> ScoreVector:
    """LOF score of every point"""
    minpts = validate_minpts(minpts, data.n)
    index = index if index is not None else build_index(data, backend)
    profiles = index.profiles(minpts, workers=workers)
    scores = lof_subset(profiles, np.arange(data.n), minpts)
    infinite = int(np.isinf(scores).sum())
    if infinite:
        logger.debug(f"{infinite} points have infinite LOF (duplicate clusters)")
    return ScoreVector(scores)
