"""
k-nearest-neighbor search over a PointSet
Two interchangeable backends (brute force and a space-partitioning tree) that
return identical tie-inclusive neighborhoods and bit-identical distances.
"""

import heapq
import itertools
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import Config
from scoring.points import InputError, PointSet, pair_distances, pairwise_squared

logger = logging.getLogger(__name__)

# Relative slack on Gram-matrix squared distances; far above their rounding error
SCREEN_SLACK = 1e-8


@dataclass(frozen=True)
class NeighborList:
    """Neighbors of one query, ascending by (distance, point id)"""
    ids: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return self.ids.shape[0]

    def entries(self) -> List[Tuple[int, float]]:
        return [(int(i), float(d)) for i, d in zip(self.ids, self.distances)]


@dataclass(frozen=True)
class KDistanceProfile:
    point_id: int
    k_distance: float
    neighborhood: np.ndarray
    distances: np.ndarray


class ProfileCache:
    """
    k-distance profiles of every point for one k, stored as flat segments:
    point p's neighborhood is neighbor_ids[offsets[p]:offsets[p + 1]]
    """

    def __init__(self, data: PointSet, k: int, offsets: np.ndarray,
                 neighbor_ids: np.ndarray, neighbor_distances: np.ndarray):
        self.data = data
        self.k = k
        self.offsets = offsets
        self.neighbor_ids = neighbor_ids
        self.neighbor_distances = neighbor_distances
        self.sizes = np.diff(offsets)
        # k-th smallest distance is the k-th entry of each sorted segment
        self.k_distance = neighbor_distances[offsets[:-1] + k - 1]
        for array in (self.offsets, self.neighbor_ids, self.neighbor_distances,
                      self.sizes, self.k_distance):
            array.setflags(write=False)

    @property
    def n(self) -> int:
        return self.sizes.shape[0]

    def neighbors(self, p: int) -> np.ndarray:
        return self.neighbor_ids[self.offsets[p]:self.offsets[p + 1]]

    def distances(self, p: int) -> np.ndarray:
        return self.neighbor_distances[self.offsets[p]:self.offsets[p + 1]]

    def profile(self, p: int) -> KDistanceProfile:
        return KDistanceProfile(
            point_id=int(p),
            k_distance=float(self.k_distance[p]),
            neighborhood=self.neighbors(p),
            distances=self.distances(p),
        )

    def distance(self, p: int, o: int) -> float:
        """d(p, o), read from p's neighborhood when o is in it"""
        ids = self.neighbors(p)
        hit = np.flatnonzero(ids == o)
        if hit.size:
            return float(self.distances(p)[hit[0]])
        pair = pair_distances(self.data.points, np.array([p]), np.array([o]))
        return float(pair[0])


def _assemble(n: int, k: int, data: PointSet,
              pieces: List[Tuple[np.ndarray, np.ndarray, np.ndarray]]) -> ProfileCache:
    sizes = np.concatenate([p[0] for p in pieces]) if pieces else np.zeros(0, dtype=np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    ids = np.concatenate([p[1] for p in pieces])
    distances = np.concatenate([p[2] for p in pieces])
    return ProfileCache(data, k, offsets, ids, distances)


def _tie_inclusive(rows: np.ndarray, cols: np.ndarray, dist: np.ndarray,
                   k: int, n_rows: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Reduce candidate (row, col, dist) triples to tie-inclusive k-neighborhoods.
    Candidates must contain every true k-nearest neighbor of each row.
    """
    order = np.lexsort((cols, dist, rows))
    rows, cols, dist = rows[order], cols[order], dist[order]
    counts = np.bincount(rows, minlength=n_rows)
    starts = np.zeros(n_rows, dtype=np.int64)
    np.cumsum(counts[:-1], out=starts[1:])
    kth = dist[starts + k - 1]
    keep = dist <= kth[rows]
    return np.bincount(rows[keep], minlength=n_rows), cols[keep], dist[keep]


class _BruteForce:
    """
    All-pairs search. Candidates are screened with a Gram-matrix estimate of the
    squared distances, then rescored exactly with pair_distances so the result
    matches the tree backend bit for bit.
    """

    def __init__(self, data: PointSet, block_rows: int = Config.BRUTE_BLOCK_ROWS):
        self.data = data
        self.block_rows = block_rows
        points = data.points
        self._mean = points.mean(axis=0)
        self._centered = points - self._mean
        self._norms = np.einsum("ij,ij->i", self._centered, self._centered)
        self._slack_base = self._norms.max() + float(self._mean @ self._mean)

    def query(self, q: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
        points = self.data.points
        dist = np.sqrt(pairwise_squared(points[q][None, :], points)[0])
        dist[q] = np.inf
        kth = np.partition(dist, k - 1)[k - 1]
        ids = np.flatnonzero(dist <= kth)
        order = np.lexsort((ids, dist[ids]))
        return ids[order], dist[ids][order]

    def block(self, start: int, stop: int, k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.data.n
        rows_idx = np.arange(start, stop)
        approx = self._norms[start:stop, None] + self._norms[None, :] \
            - 2.0 * (self._centered[start:stop] @ self._centered.T)
        approx[np.arange(stop - start), rows_idx] = np.inf
        kth = np.partition(approx, k - 1, axis=1)[:, k - 1]
        slack = SCREEN_SLACK * (self._norms[start:stop] + self._slack_base) + 1e-300
        local_rows, cols = np.nonzero(approx <= (kth + slack)[:, None])
        dist = pair_distances(self.data.points, rows_idx[local_rows], cols)
        sizes, ids, distances = _tie_inclusive(local_rows, cols, dist, k, stop - start)
        return sizes, ids, distances

    def profiles(self, k: int, workers: int = 1) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        n = self.data.n
        bounds = [(s, min(s + self.block_rows, n)) for s in range(0, n, self.block_rows)]
        if workers <= 1:
            return [self.block(s, e, k) for s, e in bounds]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda b: self.block(b[0], b[1], k), bounds))


@dataclass
class _Node:
    lower: np.ndarray
    upper: np.ndarray
    ids: Optional[np.ndarray] = None
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None


class _PartitionTree:
    """
    Balanced binary space-partitioning tree: each internal node splits its
    points at the median of the widest-spread dimension
    """

    def __init__(self, data: PointSet, leaf_size: int = Config.TREE_LEAF_SIZE):
        self.data = data
        self.leaf_size = leaf_size
        self.root = self._build(np.arange(data.n))

    def _build(self, ids: np.ndarray) -> _Node:
        block = self.data.points[ids]
        lower, upper = block.min(axis=0), block.max(axis=0)
        spread = upper - lower
        if ids.size <= self.leaf_size or spread.max() == 0.0:
            return _Node(lower, upper, ids=ids)

        dim = int(np.argmax(spread))
        order = np.lexsort((ids, block[:, dim]))
        half = ids.size // 2
        return _Node(lower, upper,
                     left=self._build(ids[order[:half]]),
                     right=self._build(ids[order[half:]]))

    @staticmethod
    def _box_distance(q: np.ndarray, node: _Node) -> float:
        # Same column order as pairwise_squared, so never above a member's distance
        diff = q - np.clip(q, node.lower, node.upper)
        total = 0.0
        for value in diff:
            total += value * value
        return float(np.sqrt(total))

    def query(self, q_id: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
        q = self.data.points[q_id]
        best = np.empty(0)
        radius = np.inf
        found_ids, found_dist = [], []
        tie = itertools.count()
        heap = [(0.0, next(tie), self.root)]

        while heap:
            bound, _, node = heapq.heappop(heap)
            if bound > radius:
                break
            if node.ids is not None:
                ids = node.ids[node.ids != q_id]
                if ids.size == 0:
                    continue
                dist = np.sqrt(pairwise_squared(q[None, :], self.data.points[ids])[0])
                found_ids.append(ids)
                found_dist.append(dist)
                best = np.concatenate([best, dist])
                if best.size > k:
                    best = np.partition(best, k - 1)[:k]
                if best.size == k:
                    radius = best.max()
                continue
            for child in (node.left, node.right):
                child_bound = self._box_distance(q, child)
                if child_bound <= radius:
                    heapq.heappush(heap, (child_bound, next(tie), child))

        ids = np.concatenate(found_ids)
        dist = np.concatenate(found_dist)
        keep = dist <= radius
        ids, dist = ids[keep], dist[keep]
        order = np.lexsort((ids, dist))
        return ids[order], dist[order]

    def profiles(self, k: int, workers: int = 1) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
        def run(q: int):
            ids, dist = self.query(q, k)
            return np.array([ids.size]), ids, dist

        if workers <= 1:
            return [run(q) for q in range(self.data.n)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, range(self.data.n)))


class NeighborIndex:
    """
    Read-only k-NN index over a PointSet. Profiles for a given k are computed
    once and cached; queries never mutate the indexed data.
    """

    def __init__(self, data: PointSet, backend: str = Config.DEFAULT_BACKEND,
                 leaf_size: int = Config.TREE_LEAF_SIZE):
        if data.n < 2:
            raise InputError(f"Need at least 2 points to search neighbors, got {data.n}")
        if backend == "brute":
            self._search = _BruteForce(data)
        elif backend == "tree":
            self._search = _PartitionTree(data, leaf_size=leaf_size)
        else:
            raise InputError(f"Unknown neighbor backend '{backend}' (expected one of {Config.BACKENDS})")

        self.data = data
        self.backend = backend
        self._profiles: Dict[int, ProfileCache] = {}
        self._lock = threading.Lock()

    def _check_k(self, k) -> int:
        if isinstance(k, (bool, np.bool_)) or not isinstance(k, (int, np.integer)):
            raise InputError(f"k must be an integer, got {k!r}")
        if not 1 <= k <= self.data.n - 1:
            raise InputError(f"k must be in [1, {self.data.n - 1}], got {k}")
        return int(k)

    def query_knn(self, query_id: int, k: int) -> NeighborList:
        """All points within the k-th nearest distance of query_id, excluding itself"""
        q = self.data.check_id(query_id)
        k = self._check_k(k)
        cached = self._profiles.get(k)
        if cached is not None:
            return NeighborList(cached.neighbors(q), cached.distances(q))
        ids, dist = self._search.query(q, k)
        return NeighborList(ids, dist)

    def k_distance_profile(self, query_id: int, k: int) -> KDistanceProfile:
        neighbors = self.query_knn(query_id, k)
        return KDistanceProfile(
            point_id=int(query_id),
            k_distance=float(neighbors.distances[k - 1]),
            neighborhood=neighbors.ids,
            distances=neighbors.distances,
        )

    def profiles(self, k: int, workers: int = 1) -> ProfileCache:
        k = self._check_k(k)
        with self._lock:
            cached = self._profiles.get(k)
            if cached is None:
                logger.debug(f"Computing k={k} profiles for N={self.data.n} ({self.backend})")
                pieces = self._search.profiles(k, workers=workers)
                cached = _assemble(self.data.n, k, self.data, pieces)
                self._profiles[k] = cached
        return cached


def build_index(data: PointSet, backend: str = Config.DEFAULT_BACKEND) -> NeighborIndex:
    return NeighborIndex(data, backend=backend)
