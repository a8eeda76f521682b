"""
Core data types shared by every detector
Point sets, ground-truth labels, score vectors and the Euclidean distance
"""

from dataclasses import dataclass
from typing import Iterable

import numpy as np


class InputError(ValueError):
    """Caller-supplied data or parameters are invalid"""


class ContractError(RuntimeError):
    """A precondition between two internal components was broken"""


def _read_only(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PointSet:
    """
    N x m matrix of finite 64-bit features; row i is point id i
    """
    points: np.ndarray

    def __post_init__(self):
        try:
            array = np.array(self.points, dtype=np.float64)
        except (TypeError, ValueError) as e:
            raise InputError(f"Features must be real numbers: {e}")

        if array.ndim != 2:
            raise InputError(f"Expected a 2-D feature matrix, got shape {array.shape}")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise InputError(f"Need at least one row and one column, got shape {array.shape}")
        if not np.isfinite(array).all():
            row, col = np.argwhere(~np.isfinite(array))[0]
            raise InputError(f"Non-finite feature at row {row}, column {col}")

        object.__setattr__(self, "points", _read_only(array))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def row(self, point_id: int) -> np.ndarray:
        self.check_id(point_id)
        return self.points[point_id]

    def check_id(self, point_id) -> int:
        if isinstance(point_id, (bool, np.bool_)) or not isinstance(point_id, (int, np.integer)):
            raise InputError(f"Point id must be an integer, got {point_id!r}")
        if not 0 <= point_id < self.n:
            raise InputError(f"Unknown point id {point_id} (N={self.n})")
        return int(point_id)

    def take(self, ids: Iterable[int]) -> "PointSet":
        """Sub point set with rows in the given order"""
        return PointSet(self.points[np.asarray(ids, dtype=np.int64)])


@dataclass(frozen=True)
class GroundTruth:
    """
    Binary outlier flags aligned with a PointSet (True = outlier)
    """
    labels: np.ndarray

    def __post_init__(self):
        raw = np.asarray(self.labels)
        if raw.ndim != 1:
            raise InputError(f"Labels must be one-dimensional, got shape {raw.shape}")
        if raw.dtype != np.bool_:
            if not np.isin(raw, (0, 1)).all():
                raise InputError("Labels must be binary")
        object.__setattr__(self, "labels", _read_only(raw.astype(bool)))

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def n_outliers(self) -> int:
        return int(self.labels.sum())

    @property
    def has_both_classes(self) -> bool:
        return 0 < self.n_outliers < len(self)

    def check_aligned(self, n: int):
        if len(self) != n:
            raise InputError(f"Ground truth has {len(self)} labels but the data has {n} rows")


@dataclass(frozen=True)
class ScoreVector:
    """
    Per-point outlierness; 0 marks a pruned point, +inf is allowed
    """
    scores: np.ndarray

    def __post_init__(self):
        array = np.array(self.scores, dtype=np.float64)
        if array.ndim != 1:
            raise InputError(f"Scores must be one-dimensional, got shape {array.shape}")
        if np.isnan(array).any():
            raise InputError("Scores may not contain NaN")
        if (array < 0).any():
            raise InputError("Scores must be non-negative")
        object.__setattr__(self, "scores", _read_only(array))

    def __len__(self) -> int:
        return self.scores.shape[0]

    def __getitem__(self, point_id):
        return self.scores[point_id]

    @property
    def pruned(self) -> np.ndarray:
        return self.scores == 0.0


def pairwise_squared(queries: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """
    Squared Euclidean distances, shape (len(queries), len(rows))

    Accumulated one column at a time so every pair is evaluated with the same
    sequence of operations no matter how the pairs are batched. Both neighbor
    backends rely on this to produce bit-identical distances.
    """
    queries = np.asarray(queries, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.float64)
    if queries.shape[-1] != rows.shape[-1]:
        raise InputError(f"Dimension mismatch: {queries.shape[-1]} vs {rows.shape[-1]}")

    total = np.zeros((queries.shape[0], rows.shape[0]))
    diff = np.empty_like(total)
    for j in range(queries.shape[1]):
        np.subtract(queries[:, j, None], rows[None, :, j], out=diff)
        np.multiply(diff, diff, out=diff)
        total += diff
    return total


def pair_distances(points: np.ndarray, left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Distances for explicit (left[i], right[i]) pairs, same arithmetic as pairwise_squared"""
    total = np.zeros(left.shape[0])
    for j in range(points.shape[1]):
        diff = points[left, j] - points[right, j]
        total += diff * diff
    return np.sqrt(total)


def euclidean(a, b) -> float:
    """L2 distance between two rows of identical dimensionality"""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise InputError("euclidean expects two 1-D rows")
    if a.shape != b.shape:
        raise InputError(f"Dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(np.sqrt(pairwise_squared(a[None, :], b[None, :])[0, 0]))
