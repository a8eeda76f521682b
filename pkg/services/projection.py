"""
Projection Service
Projects a point set onto its first two principal components for plotting
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

from scoring.points import GroundTruth, InputError, PointSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Projection:
    coordinates: np.ndarray  # N x 2
    components: np.ndarray  # 2 x m, unit rows
    explained_variance: np.ndarray  # top-2 covariance eigenvalues, descending
    mean: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.coordinates @ self.components + self.mean


def project_2pc(data: PointSet) -> Projection:
    if data.m < 2:
        raise InputError(f"Projection needs at least 2 features, got {data.m}")
    if data.n < 3:
        raise InputError(f"Projection needs at least 3 points, got {data.n}")

    mean = data.points.mean(axis=0)
    centered = data.points - mean
    if not centered.any():
        raise InputError("All points are identical; there is no principal direction")

    covariance = centered.T @ centered / (data.n - 1)
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    top = np.argsort(eigenvalues, kind="stable")[::-1][:2]
    components = eigenvectors[:, top].T.copy()

    # first nonzero loading of each component is positive
    for row in components:
        nonzero = np.flatnonzero(np.abs(row) > 1e-12)
        if nonzero.size and row[nonzero[0]] < 0:
            row *= -1.0

    return Projection(
        coordinates=centered @ components.T,
        components=components,
        explained_variance=np.maximum(eigenvalues[top], 0.0),
        mean=mean,
    )


def write_projection(projection: Projection, path, truth: Optional[GroundTruth] = None) -> Path:
    frame = pd.DataFrame({
        "id": np.arange(projection.coordinates.shape[0]),
        "pc1": projection.coordinates[:, 0],
        "pc2": projection.coordinates[:, 1],
    })
    if truth is not None:
        truth.check_aligned(len(frame))
        frame["outlier"] = truth.labels.astype(int)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.info(
        f"Wrote 2-component projection of {len(frame)} points to {path} "
        f"(explained variance {projection.explained_variance[0]:.4g}, {projection.explained_variance[1]:.4g})"
    )
    return path
