"""
Prune-based LOF
Estimates a cheap density (delta) for every point, prunes the dense half at
the median and computes LOF only for what is left. Pruned points still serve
as neighbors, so every kept score equals the full-LOF score exactly.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from config import Config
from scoring.lof import LrdCache, lof_subset, validate_minpts
from scoring.neighbors import NeighborIndex, ProfileCache, build_index
from scoring.points import ContractError, InputError, PointSet, ScoreVector

logger = logging.getLogger(__name__)

HIGH_DELTA = "high-delta"
LOW_DELTA = "low-delta"
PRUNE_RULES = (HIGH_DELTA, LOW_DELTA)


@dataclass(frozen=True)
class PruneMask:
    kept: np.ndarray
    median_delta: float
    eliminated_extremes: Tuple[int, int]  # (min-delta id, max-delta id)
    rule: str = HIGH_DELTA

    @property
    def n_kept(self) -> int:
        return int(self.kept.sum())


@dataclass(frozen=True)
class PlofResult:
    scores: ScoreVector
    deltas: np.ndarray
    mask: PruneMask
    lrd_evaluations: int

    @property
    def prune_rate(self) -> float:
        return prune_rate(self.mask)


def _segment_deltas(distances: np.ndarray, starts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    totals = np.add.reduceat(distances, starts)
    with np.errstate(divide="ignore"):
        deltas = np.where(totals == 0.0, np.inf, sizes.astype(np.float64) ** 2 / totals)
    return deltas


def delta_density(profiles: ProfileCache, p: int, k: int) -> float:
    """|M|^2 / sum of d(p, i) over the tie-inclusive k-distance neighborhood M"""
    if profiles.k != k:
        raise ContractError(f"Profiles were computed for k={profiles.k}, not k={k}")
    distances = profiles.distances(p)
    return float(_segment_deltas(distances, np.array([0]), np.array([distances.size]))[0])


def delta_vector(profiles: ProfileCache) -> np.ndarray:
    """delta_density for every point in one pass"""
    return _segment_deltas(profiles.neighbor_distances, profiles.offsets[:-1], profiles.sizes)


def prune_mask(deltas: np.ndarray, rule: str = HIGH_DELTA) -> PruneMask:
    """
    Median of the deltas left after dropping one minimum and one maximum;
    with the default rule, points denser than that median are pruned
    """
    deltas = np.asarray(deltas, dtype=np.float64)
    if deltas.ndim != 1 or deltas.size <= 4:
        raise InputError(f"Pruning needs more than 4 delta values, got {deltas.size}")
    if rule not in PRUNE_RULES:
        raise InputError(f"Unknown prune rule '{rule}' (expected one of {PRUNE_RULES})")

    order = np.argsort(deltas, kind="stable")
    low_id, high_id = int(order[0]), int(order[-1])
    remaining = np.delete(deltas, [low_id, high_id])
    median = float(np.median(remaining))

    if rule == HIGH_DELTA:
        kept = deltas <= median
    else:
        kept = deltas >= median
    kept.setflags(write=False)
    return PruneMask(kept=kept, median_delta=median,
                     eliminated_extremes=(low_id, high_id), rule=rule)


def prune_rate(mask: PruneMask) -> float:
    return float(1.0 - mask.kept.mean())


def plof_run(data: PointSet, minpts: int = Config.DEFAULT_MINPTS,
             backend: str = Config.DEFAULT_BACKEND, prune_rule: str = HIGH_DELTA,
             index: Optional[NeighborIndex] = None, workers: int = 1) -> PlofResult:
    if data.n <= 4:
        raise InputError(f"PLOF needs more than 4 points, got {data.n}")
    minpts = validate_minpts(minpts, data.n)
    index = index if index is not None else build_index(data, backend)
    profiles = index.profiles(minpts, workers=workers)

    deltas = delta_vector(profiles)
    mask = prune_mask(deltas, rule=prune_rule)
    kept_ids = np.flatnonzero(mask.kept)

    cache = LrdCache(profiles)
    scores = np.zeros(data.n)
    scores[kept_ids] = lof_subset(profiles, kept_ids, minpts, lrd_cache=cache)

    logger.debug(
        f"PLOF kept {kept_ids.size}/{data.n} points (median delta {mask.median_delta:.6g}), "
        f"{cache.computed} LRD evaluations"
    )
    return PlofResult(scores=ScoreVector(scores), deltas=deltas, mask=mask,
                      lrd_evaluations=cache.computed)


def plof_scores(data: PointSet, minpts: int = Config.DEFAULT_MINPTS,
                backend: str = Config.DEFAULT_BACKEND, prune_rule: str = HIGH_DELTA) -> ScoreVector:
    return plof_run(data, minpts, backend=backend, prune_rule=prune_rule).scores
