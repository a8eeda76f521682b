"""
Synthetic Data Service
Seeded Gaussian-blob inliers with uniformly scattered outliers
"""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

from config import Config
from scoring.points import GroundTruth, InputError, PointSet, pairwise_squared

logger = logging.getLogger(__name__)


class SyntheticSpec(BaseModel):
    """Recipe for a synthetic benchmark set; generation is a pure function of it"""

    name: str = "synthetic"
    n_inliers: int = Field(950, ge=1)
    n_outliers: int = Field(50, ge=1)
    m: int = Field(2, ge=1)
    cluster_count: int = Field(2, ge=1)
    cluster_spread: float = Field(1.0, gt=0)
    cluster_range: float = Field(10.0, gt=0)
    outlier_box_scale: float = Field(1.5, gt=0)
    outlier_clearance: float = Field(0.0, ge=0)
    seed: int = 0

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as e:
            raise InputError(f"Invalid synthetic spec: {e}") from e

    @model_validator(mode="after")
    def check_sizes(self):
        if self.n_outliers >= self.n_inliers:
            raise ValueError(f"n_outliers ({self.n_outliers}) must be below n_inliers ({self.n_inliers})")
        return self

    @property
    def n(self) -> int:
        return self.n_inliers + self.n_outliers


def _draw_outliers(rng, spec: SyntheticSpec, centers: np.ndarray,
                   lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Uniform draws from the box, keeping only those clear of every cluster center"""
    clearance = spec.outlier_clearance * spec.cluster_spread
    found = np.empty((0, spec.m))
    for _ in range(Config.SYNTHETIC_MAX_OUTLIER_DRAWS):
        batch = rng.uniform(lower, upper, size=(spec.n_outliers, spec.m))
        if clearance > 0:
            gap = pairwise_squared(batch, centers).min(axis=1)
            batch = batch[gap >= clearance ** 2]
        found = np.vstack([found, batch])
        if len(found) >= spec.n_outliers:
            return found[:spec.n_outliers]
    raise InputError(
        f"Could only place {len(found)} of {spec.n_outliers} outliers at clearance {clearance:g}; "
        f"lower outlier_clearance or raise outlier_box_scale"
    )


def make_synthetic(spec: SyntheticSpec) -> Tuple[PointSet, GroundTruth]:
    rng = np.random.default_rng(spec.seed)

    centers = rng.uniform(-spec.cluster_range, spec.cluster_range, size=(spec.cluster_count, spec.m))
    membership = rng.integers(0, spec.cluster_count, size=spec.n_inliers)
    inliers = centers[membership] + rng.normal(0.0, spec.cluster_spread, size=(spec.n_inliers, spec.m))

    # enclosing box of the inliers, scaled about its center
    lower, upper = inliers.min(axis=0), inliers.max(axis=0)
    middle = (lower + upper) / 2.0
    half = (upper - lower) / 2.0 * spec.outlier_box_scale
    outliers = _draw_outliers(rng, spec, centers, middle - half, middle + half)

    points = np.vstack([inliers, outliers])
    labels = np.concatenate([np.zeros(spec.n_inliers, dtype=bool), np.ones(spec.n_outliers, dtype=bool)])
    order = rng.permutation(spec.n)

    return PointSet(points[order]), GroundTruth(labels[order])


def write_synthetic(spec: SyntheticSpec, path) -> Path:
    data, truth = make_synthetic(spec)
    frame = pd.DataFrame(data.points, columns=[f"x{j}" for j in range(data.m)])
    frame["label"] = np.where(truth.labels, "outlier", "inlier")

    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(f"Wrote {data.n} synthetic points ({truth.n_outliers} outliers) to {path}")
    return path


def synthetic_from_settings(settings: dict) -> SyntheticSpec:
    """Build a spec from KEY=value settings (upper-case keys)"""
    values = {key.lower(): value for key, value in settings.items()
              if key.upper() != "KIND" and value not in (None, "")}
    return SyntheticSpec(**values)
