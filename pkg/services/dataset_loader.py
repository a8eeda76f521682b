"""
Dataset Loader Service
Reads labelled delimited-text datasets described by KEY=value spec files,
maps raw class labels to binary outlier ground truth and optionally
standardizes the features
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from pydantic import BaseModel, Field, field_validator, model_validator

from scoring.points import GroundTruth, InputError, PointSet
from services.synthetic_data import SyntheticSpec, make_synthetic, synthetic_from_settings

logger = logging.getLogger(__name__)


class DatasetError(InputError):
    """A dataset file is missing, malformed or does not match its spec"""


def split_list(value) -> List[str]:
    """Comma-separated text or an iterable, as a list of stripped non-empty strings"""
    if value is None:
        return []
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return [str(item).strip() for item in value]


class DatasetSpec(BaseModel):
    """How to turn one delimited file into (PointSet, GroundTruth)"""

    name: str
    path: str
    delimiter: str = ","
    header: bool = False
    label_column: str = "-1"
    outlier_classes: List[str]
    normal_classes: List[str] = Field(default_factory=list)
    drop_columns: List[str] = Field(default_factory=list)
    missing_token: Optional[str] = None
    normal_limit: Optional[int] = Field(None, ge=1)
    outlier_limit: Optional[int] = Field(None, ge=1)
    standardize: bool = False

    @field_validator("outlier_classes", "normal_classes", "drop_columns", mode="before")
    @classmethod
    def split_lists(cls, v):
        return split_list(v)

    @field_validator("delimiter", mode="before")
    @classmethod
    def decode_delimiter(cls, v):
        aliases = {"tab": "\t", "\\t": "\t", "space": " ", "comma": ",", "semicolon": ";"}
        return aliases.get(str(v).lower(), v) if v else ","

    @field_validator("label_column", mode="before")
    @classmethod
    def label_as_text(cls, v):
        return str(v)

    @model_validator(mode="after")
    def check_classes(self):
        if not self.outlier_classes:
            raise ValueError("outlier_classes must name at least one label value")
        overlap = set(self.outlier_classes) & set(self.normal_classes)
        if overlap:
            raise ValueError(f"Labels {sorted(overlap)} are both outlier and normal classes")
        return self


@dataclass(frozen=True)
class LoadedDataset:
    name: str
    data: PointSet
    truth: GroundTruth
    feature_names: List[str]


def _resolve_column(columns: List, reference: str, what: str):
    """Column by header name, otherwise by (possibly negative) position"""
    if reference in columns:
        return reference
    text = reference.strip()
    if text.lstrip("-").isdigit():
        position = int(text)
        if -len(columns) <= position < len(columns):
            return columns[position]
    raise DatasetError(f"{what} '{reference}' not found (file has {len(columns)} columns)")


def _parse_features(frame: pd.DataFrame, row_numbers: np.ndarray) -> np.ndarray:
    columns = []
    for name in frame.columns:
        raw = frame[name]
        try:
            values = raw.astype(np.float64).to_numpy()
        except ValueError:
            values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=np.float64)
        bad = ~np.isfinite(values)
        if bad.any():
            first = int(np.argmax(bad))
            raise DatasetError(
                f"Row {row_numbers[first]}, column '{name}': cannot read '{raw.iloc[first]}' as a finite number"
            )
        columns.append(values)
    return np.column_stack(columns)


def standardize(points: np.ndarray) -> np.ndarray:
    """Per-column z-score with population sd; constant columns become zeros"""
    mean = points.mean(axis=0)
    sd = points.std(axis=0)
    constant = np.ptp(points, axis=0) == 0
    result = np.zeros_like(points)
    varying = ~constant
    result[:, varying] = (points[:, varying] - mean[varying]) / sd[varying]
    return result


def load_csv(spec: DatasetSpec) -> LoadedDataset:
    path = Path(spec.path)
    if not path.is_file():
        raise DatasetError(f"Dataset file not found: {path}")

    try:
        frame = pd.read_csv(path, sep=spec.delimiter, header=0 if spec.header else None,
                            dtype=str, keep_default_na=False, skipinitialspace=True)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DatasetError(f"Could not parse {path}: {e}")

    frame = frame.apply(lambda column: column.str.strip())
    # 1-based data row numbers in file order
    row_numbers = np.arange(1, len(frame) + 1)
    columns = list(frame.columns)
    label_name = _resolve_column(columns, spec.label_column, "Label column")
    dropped = [_resolve_column(columns, ref, "Dropped column") for ref in spec.drop_columns]
    if label_name in dropped:
        raise DatasetError(f"Label column '{spec.label_column}' is also listed in drop_columns")

    keep = np.ones(len(frame), dtype=bool)
    if spec.missing_token is not None:
        has_missing = (frame == spec.missing_token).any(axis=1).to_numpy()
        if has_missing.any():
            logger.info(f"{spec.name}: dropping {int(has_missing.sum())} rows containing '{spec.missing_token}'")
        keep &= ~has_missing

    labels = frame[label_name].to_numpy(dtype=str)
    is_outlier = np.isin(labels, spec.outlier_classes)
    if spec.normal_classes:
        keep &= is_outlier | np.isin(labels, spec.normal_classes)

    for mask, limit in ((~is_outlier, spec.normal_limit), (is_outlier, spec.outlier_limit)):
        if limit is not None:
            selected = np.flatnonzero(keep & mask)
            keep[selected[limit:]] = False

    features = frame.drop(columns=[label_name] + dropped)[keep]
    if features.shape[1] == 0:
        raise DatasetError(f"{spec.name}: no feature columns left after dropping the label and {dropped}")
    if not keep.any():
        raise DatasetError(f"{spec.name}: no rows left after filtering")

    points = _parse_features(features, row_numbers[keep])
    if spec.standardize:
        points = standardize(points)

    truth = GroundTruth(is_outlier[keep])
    logger.info(f"Loaded {spec.name}: N={points.shape[0]}, m={points.shape[1]}, {truth.n_outliers} outliers")
    return LoadedDataset(
        name=spec.name,
        data=PointSet(points),
        truth=truth,
        feature_names=[str(c) for c in features.columns],
    )


def read_spec_file(path) -> Union[DatasetSpec, SyntheticSpec]:
    """
    Parse a KEY=value dataset spec. KIND=synthetic selects a generated set,
    anything else a delimited file whose PATH is relative to the spec file.
    """
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"Dataset spec not found: {path}")

    settings = {key.upper(): value for key, value in dotenv_values(path).items()}
    settings.setdefault("NAME", path.stem)
    kind = (settings.get("KIND") or "csv").lower()
    if kind == "synthetic":
        return synthetic_from_settings(settings)
    if kind != "csv":
        raise DatasetError(f"{path}: unknown KIND '{kind}' (expected csv or synthetic)")

    values = {key.lower(): value for key, value in settings.items()
              if key != "KIND" and value not in (None, "")}
    if "path" in values and not Path(values["path"]).is_absolute():
        values["path"] = str(path.parent / values["path"])
    try:
        return DatasetSpec(**values)
    except ValueError as e:
        raise DatasetError(f"Invalid dataset spec {path}: {e}")


def load_dataset(spec: Union[DatasetSpec, SyntheticSpec, str, Path]) -> LoadedDataset:
    if isinstance(spec, (str, Path)):
        spec = read_spec_file(spec)
    if isinstance(spec, SyntheticSpec):
        data, truth = make_synthetic(spec)
        return LoadedDataset(spec.name, data, truth, [f"x{j}" for j in range(data.m)])
    return load_csv(spec)
