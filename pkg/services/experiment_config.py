"""
Experiment configuration
KEY=value experiment files validated into an ExperimentConfig
"""

import logging
from pathlib import Path
from typing import List, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, Field, field_validator

from config import Config
from scoring.plof import PRUNE_RULES
from scoring.points import InputError
from services.dataset_loader import DatasetSpec, read_spec_file, split_list
from services.evaluation import DecisionRule
from services.synthetic_data import SyntheticSpec

logger = logging.getLogger(__name__)

FORMATS = ("text", "delimited", "structured", "pdf")


class ExperimentConfig(BaseModel):
    name: str = "experiment"
    datasets: List[Union[DatasetSpec, SyntheticSpec]] = Field(..., min_length=1)
    detectors: List[str] = Field(default_factory=lambda: list(Config.DETECTORS), min_length=1)
    minpts: int = Field(Config.DEFAULT_MINPTS, ge=1)
    rule: str = f"threshold:{Config.DEFAULT_THRESHOLD}"
    repetitions: int = Field(Config.DEFAULT_REPETITIONS, ge=1)
    backend: str = Config.DEFAULT_BACKEND
    seed: int = Config.DEFAULT_SEED
    output_dir: str = Config.OUTPUT_DIR
    fastlof_chunks: Optional[int] = Field(None, ge=1)
    devtomean_clusters: Optional[int] = Field(None, ge=1)
    devtomean_threshold: float = Field(Config.DEFAULT_DEVTOMEAN_THRESHOLD, ge=0)
    prune_rule: str = PRUNE_RULES[0]
    formats: List[str] = Field(default_factory=lambda: ["text", "structured"])
    minpts_sweep: List[int] = Field(default_factory=list)

    @field_validator("detectors", "formats", mode="before")
    @classmethod
    def split_names(cls, v):
        return [item.lower() for item in split_list(v)]

    @field_validator("minpts_sweep", mode="before")
    @classmethod
    def split_sweep(cls, v):
        return [int(item) for item in split_list(v)]

    @field_validator("detectors")
    @classmethod
    def known_detectors(cls, v):
        unknown = [d for d in v if d not in Config.DETECTORS]
        if unknown:
            raise ValueError(f"Unknown detectors {unknown} (expected {list(Config.DETECTORS)})")
        if len(set(v)) != len(v):
            raise ValueError("Each detector may be listed once")
        return v

    @field_validator("formats")
    @classmethod
    def known_formats(cls, v):
        unknown = [f for f in v if f not in FORMATS]
        if unknown:
            raise ValueError(f"Unknown output formats {unknown} (expected {list(FORMATS)})")
        return v

    @field_validator("backend")
    @classmethod
    def known_backend(cls, v):
        if v not in Config.BACKENDS:
            raise ValueError(f"Unknown backend '{v}' (expected {list(Config.BACKENDS)})")
        return v

    @field_validator("prune_rule")
    @classmethod
    def known_prune_rule(cls, v):
        if v not in PRUNE_RULES:
            raise ValueError(f"Unknown prune rule '{v}' (expected {list(PRUNE_RULES)})")
        return v

    @field_validator("rule")
    @classmethod
    def parseable_rule(cls, v):
        try:
            DecisionRule.parse(v)
        except InputError as e:
            raise ValueError(str(e))
        return v

    @property
    def decision_rule(self) -> DecisionRule:
        return DecisionRule.parse(self.rule)

    @property
    def dataset_names(self) -> List[str]:
        return [spec.name for spec in self.datasets]


def read_experiment_file(path, **overrides) -> ExperimentConfig:
    """
    Load an experiment file; DATASETS lists dataset spec files relative to it.
    Keyword overrides (CLI flags) win over file keys when not None.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"Experiment file not found: {path}")

    values = {key.lower(): value for key, value in dotenv_values(path).items()
              if value not in (None, "")}
    values.setdefault("name", path.stem)
    values.update({key: value for key, value in overrides.items() if value is not None})

    references = split_list(values.pop("datasets", ""))
    if not references:
        raise InputError(f"{path}: DATASETS lists no dataset spec files")
    datasets = []
    for reference in references:
        spec_path = Path(reference)
        if not spec_path.is_absolute():
            spec_path = path.parent / spec_path
        datasets.append(read_spec_file(spec_path))

    config = ExperimentConfig(datasets=datasets, **values)
    logger.debug(f"Experiment '{config.name}': {len(datasets)} datasets, detectors {config.detectors}")
    return config
