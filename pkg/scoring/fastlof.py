"""
Chunked LOF baseline
The dataset is split into random chunks and every point's neighbors are
searched only inside its own chunk (single pass, no refinement).
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from config import Config
from scoring.lof import lof_subset, validate_minpts
from scoring.neighbors import NeighborIndex
from scoring.points import InputError, PointSet, ScoreVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChunkAssignment:
    chunk_ids: np.ndarray
    chunk_count: int
    seed: Optional[int] = None

    def __post_init__(self):
        chunk_ids = np.asarray(self.chunk_ids, dtype=np.int64)
        if chunk_ids.ndim != 1:
            raise InputError("Chunk ids must be one-dimensional")
        if self.chunk_count < 1:
            raise InputError(f"Chunk count must be positive, got {self.chunk_count}")
        if chunk_ids.size and (chunk_ids.min() < 0 or chunk_ids.max() >= self.chunk_count):
            raise InputError(f"Chunk ids must lie in [0, {self.chunk_count - 1}]")
        chunk_ids.setflags(write=False)
        object.__setattr__(self, "chunk_ids", chunk_ids)

    def members(self, chunk: int) -> np.ndarray:
        return np.flatnonzero(self.chunk_ids == chunk)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.chunk_ids, minlength=self.chunk_count)


@dataclass(frozen=True)
class FastLofResult:
    scores: ScoreVector
    chunks: ChunkAssignment
    neighborhoods: List[np.ndarray]  # global ids


def default_chunk_count(n: int, minpts: int) -> int:
    return max(1, math.ceil(n / (10 * minpts)))


def draw_chunks(n: int, chunk_count: int, minpts: int, seed: int = Config.DEFAULT_SEED,
                max_redraws: int = Config.FASTLOF_MAX_REDRAWS) -> ChunkAssignment:
    """Uniform random chunk per point, redrawn while any chunk has <= minpts members"""
    if isinstance(chunk_count, bool) or not isinstance(chunk_count, (int, np.integer)) or chunk_count < 1:
        raise InputError(f"Chunk count must be a positive integer, got {chunk_count!r}")

    rng = np.random.default_rng(seed)
    for attempt in range(max_redraws):
        chunk_ids = rng.integers(0, chunk_count, size=n)
        sizes = np.bincount(chunk_ids, minlength=chunk_count)
        if sizes.min() > minpts:
            if attempt:
                logger.debug(f"Chunk partition accepted after {attempt} redraws")
            return ChunkAssignment(chunk_ids, int(chunk_count), seed)
        logger.debug(f"Chunk draw {attempt + 1} has a chunk of {sizes.min()} points, redrawing")

    raise InputError(
        f"Could not split {n} points into {chunk_count} chunks of more than "
        f"{minpts} points each after {max_redraws} draws"
    )


def _score_chunk(data: PointSet, members: np.ndarray, minpts: int, backend: str):
    index = NeighborIndex(data.take(members), backend=backend)
    profiles = index.profiles(minpts)
    scores = lof_subset(profiles, np.arange(members.size), minpts)
    neighborhoods = [members[profiles.neighbors(local)] for local in range(members.size)]
    return scores, neighborhoods


def fastlof_run(data: PointSet, minpts: int = Config.DEFAULT_MINPTS,
                chunk_count: Optional[int] = None, seed: int = Config.DEFAULT_SEED,
                backend: str = Config.DEFAULT_BACKEND,
                chunks: Optional[ChunkAssignment] = None, workers: int = 1) -> FastLofResult:
    minpts = validate_minpts(minpts, data.n)
    if chunks is None:
        if chunk_count is None:
            chunk_count = default_chunk_count(data.n, minpts)
        chunks = draw_chunks(data.n, chunk_count, minpts, seed=seed)
    elif chunks.chunk_ids.size != data.n:
        raise InputError(f"Chunk assignment covers {chunks.chunk_ids.size} points, data has {data.n}")
    elif chunks.sizes().min() <= minpts:
        raise InputError(f"Every chunk needs more than {minpts} points")

    groups = [chunks.members(c) for c in range(chunks.chunk_count)]
    if workers <= 1:
        results = [_score_chunk(data, g, minpts, backend) for g in groups]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda g: _score_chunk(data, g, minpts, backend), groups))

    scores = np.zeros(data.n)
    neighborhoods: List[np.ndarray] = [None] * data.n
    for members, (chunk_scores, chunk_neighborhoods) in zip(groups, results):
        scores[members] = chunk_scores
        for point, neighborhood in zip(members, chunk_neighborhoods):
            neighborhoods[point] = neighborhood

    return FastLofResult(scores=ScoreVector(scores), chunks=chunks, neighborhoods=neighborhoods)


def fastlof_scores(data: PointSet, minpts: int = Config.DEFAULT_MINPTS,
                   chunk_count: Optional[int] = None, seed: int = Config.DEFAULT_SEED,
                   backend: str = Config.DEFAULT_BACKEND) -> ScoreVector:
    return fastlof_run(data, minpts, chunk_count=chunk_count, seed=seed, backend=backend).scores
