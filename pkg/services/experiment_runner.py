"""
Experiment Runner Service
Runs every configured detector on every configured dataset, times each
repetition and aggregates the metrics into a ReportBundle
"""

import json
import logging
import time
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field

from scoring.devtomean import devtomean_run
from scoring.fastlof import fastlof_run
from scoring.lof import lof_all
from scoring.plof import plof_run
from scoring.points import GroundTruth, InputError, PointSet, ScoreVector
from services.dataset_loader import LoadedDataset, load_dataset
from services.evaluation import DecisionRule, EvalReport, MetricSample, evaluate
from services.experiment_config import ExperimentConfig

logger = logging.getLogger(__name__)

METRICS = ("elapsed_seconds", "accuracy", "precision", "auc", "recall")
TIMING_FIELDS = ("elapsed_seconds", "elapsed_variance")


@dataclass(frozen=True)
class DetectorParams:
    minpts: int
    backend: str
    seed: int
    prune_rule: str
    fastlof_chunks: Optional[int] = None
    devtomean_clusters: Optional[int] = None
    devtomean_threshold: float = 1.0

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "DetectorParams":
        return cls(
            minpts=config.minpts,
            backend=config.backend,
            seed=config.seed,
            prune_rule=config.prune_rule,
            fastlof_chunks=config.fastlof_chunks,
            devtomean_clusters=config.devtomean_clusters,
            devtomean_threshold=config.devtomean_threshold,
        )


@dataclass(frozen=True)
class DetectionOutcome:
    scores: ScoreVector
    kept: Optional[np.ndarray] = None  # None when the detector never prunes


Detector = Callable[[PointSet, DetectorParams], DetectionOutcome]


def _run_lof(data: PointSet, params: DetectorParams) -> DetectionOutcome:
    return DetectionOutcome(lof_all(data, params.minpts, backend=params.backend))


def _run_plof(data: PointSet, params: DetectorParams) -> DetectionOutcome:
    result = plof_run(data, params.minpts, backend=params.backend, prune_rule=params.prune_rule)
    return DetectionOutcome(result.scores, result.mask.kept)


def _run_fastlof(data: PointSet, params: DetectorParams) -> DetectionOutcome:
    result = fastlof_run(data, params.minpts, chunk_count=params.fastlof_chunks,
                         seed=params.seed, backend=params.backend)
    return DetectionOutcome(result.scores)


def _run_devtomean(data: PointSet, params: DetectorParams) -> DetectionOutcome:
    result = devtomean_run(data, params.minpts, cluster_count=params.devtomean_clusters,
                           prune_threshold=params.devtomean_threshold,
                           seed=params.seed, backend=params.backend)
    return DetectionOutcome(result.scores, result.kept)


DETECTORS: Dict[str, Detector] = {
    "plof": _run_plof,
    "lof": _run_lof,
    "devtomean": _run_devtomean,
    "fastlof": _run_fastlof,
}


class ReportBundle(BaseModel):
    """Every (dataset, detector) report of one experiment, plus parameter echo"""

    name: str
    datasets: List[str]
    detectors: List[str]
    minpts: int
    rule: str
    backend: str
    repetitions: int
    seed: int
    reports: List[EvalReport] = Field(default_factory=list)

    def cell(self, dataset: str, detector: str) -> EvalReport:
        for report in self.reports:
            if report.dataset == dataset and report.detector == detector:
                return report
        raise KeyError(f"No report for ({dataset}, {detector})")

    @property
    def failures(self) -> List[EvalReport]:
        return [report for report in self.reports if report.failed]

    @property
    def partial(self) -> bool:
        return bool(self.failures)

    def table(self, metric: str) -> pd.DataFrame:
        """Datasets as rows, detectors as columns, plus an Average row; NaN marks a failed cell"""
        if metric not in METRICS:
            raise InputError(f"Unknown metric '{metric}' (expected one of {METRICS})")
        rows = {}
        for dataset in self.datasets:
            rows[dataset] = [
                np.nan if self.cell(dataset, d).failed else float(getattr(self.cell(dataset, d), metric))
                for d in self.detectors
            ]
        frame = pd.DataFrame.from_dict(rows, orient="index", columns=self.detectors)
        # skipna=False: a failed cell makes its column's average unavailable
        frame.loc["Average"] = frame.mean(axis=0, skipna=False)
        return frame

    def to_json(self, include_timing: bool = True) -> str:
        payload = self.model_dump()
        if not include_timing:
            for report in payload["reports"]:
                for key in TIMING_FIELDS:
                    report.pop(key, None)
        return json.dumps(payload, indent=2, sort_keys=True)

    def canonical_json(self) -> str:
        return self.to_json(include_timing=False)

    @classmethod
    def from_json(cls, text: str) -> "ReportBundle":
        return cls.model_validate_json(text)


class ExperimentRunner:
    """
    Scores each (dataset, detector) cell `repetitions` times. Timing covers
    index construction and scoring only; datasets are loaded beforehand.
    """

    def __init__(self, config: ExperimentConfig, detectors: Optional[Dict[str, Detector]] = None):
        self.config = config
        self.detectors = dict(DETECTORS if detectors is None else detectors)
        self.params = DetectorParams.from_config(config)
        self.rule: DecisionRule = config.decision_rule
        missing = [d for d in config.detectors if d not in self.detectors]
        if missing:
            raise InputError(f"No implementation registered for detectors {missing}")

    def run(self) -> ReportBundle:
        config = self.config
        bundle = ReportBundle(
            name=config.name,
            datasets=config.dataset_names,
            detectors=list(config.detectors),
            minpts=config.minpts,
            rule=config.rule,
            backend=config.backend,
            repetitions=config.repetitions,
            seed=config.seed,
        )
        if len(set(bundle.datasets)) != len(bundle.datasets):
            raise InputError(f"Dataset names must be unique, got {bundle.datasets}")

        for spec in config.datasets:
            try:
                dataset = load_dataset(spec)
            except Exception as e:
                logger.error(f"Could not load dataset {spec.name}: {e}")
                for detector in config.detectors:
                    bundle.reports.append(self._failed(spec.name, detector, e))
                continue

            for detector in config.detectors:
                bundle.reports.append(self.run_cell(dataset, detector))

        if bundle.partial:
            logger.warning(f"{len(bundle.failures)} of {len(bundle.reports)} cells failed")
        return bundle

    def run_cell(self, dataset: LoadedDataset, detector: str) -> EvalReport:
        run = self.detectors[detector]
        seeds, elapsed, samples, prune_rates, outliers_pruned = [], [], [], [], []
        try:
            for repetition in range(self.config.repetitions):
                seed = self.config.seed + repetition
                params = replace(self.params, seed=seed)

                start = time.perf_counter()
                outcome = run(dataset.data, params)
                elapsed.append(time.perf_counter() - start)

                seeds.append(seed)
                samples.append(evaluate(outcome.scores, dataset.truth, self.rule))
                if outcome.kept is not None:
                    prune_rates.append(float(1.0 - outcome.kept.mean()))
                    outliers_pruned.append(_outliers_pruned(outcome.kept, dataset.truth))

                logger.info(
                    f"{dataset.name} / {detector} rep {repetition + 1}/{self.config.repetitions}: "
                    f"{elapsed[-1]:.4f}s, AUC {samples[-1].auc:.3f}"
                )
        except Exception as e:
            logger.error(f"{dataset.name} / {detector} failed: {e}")
            return self._failed(dataset.name, detector, e)

        return self._aggregate(dataset.name, detector, seeds, elapsed, samples,
                               prune_rates, outliers_pruned)

    def _aggregate(self, dataset: str, detector: str, seeds: List[int], elapsed: List[float],
                   samples: List[MetricSample], prune_rates: List[float],
                   outliers_pruned: List[float]) -> EvalReport:
        aucs = [s.auc for s in samples]
        return EvalReport(
            dataset=dataset,
            detector=detector,
            accuracy=float(np.mean([s.accuracy for s in samples])),
            precision=float(np.mean([s.precision for s in samples])),
            recall=float(np.mean([s.recall for s in samples])),
            auc=float(np.mean(aucs)),
            elapsed_seconds=float(np.mean(elapsed)),
            elapsed_variance=float(np.var(elapsed)),
            auc_variance=float(np.var(aucs)),
            prune_rate=float(np.mean(prune_rates)) if prune_rates else None,
            outliers_pruned=float(np.mean(outliers_pruned)) if outliers_pruned else None,
            repetitions=len(samples),
            minpts=self.config.minpts,
            seeds=seeds,
            rule=self.config.rule,
            params=self._param_echo(detector),
            flags=sorted({flag for s in samples for flag in s.flags}),
        )

    def _param_echo(self, detector: str) -> Dict[str, str]:
        echo = {"backend": self.params.backend}
        if detector == "plof":
            echo["prune_rule"] = self.params.prune_rule
        elif detector == "fastlof":
            echo["chunks"] = str(self.params.fastlof_chunks or "auto")
        elif detector == "devtomean":
            echo["clusters"] = str(self.params.devtomean_clusters or "auto")
            echo["threshold"] = repr(self.params.devtomean_threshold)
        return echo

    def _failed(self, dataset: str, detector: str, error: Exception) -> EvalReport:
        return EvalReport(
            dataset=dataset,
            detector=detector,
            minpts=self.config.minpts,
            rule=self.config.rule,
            params=self._param_echo(detector),
            error=f"{type(error).__name__}: {error}",
        )


def _outliers_pruned(kept: np.ndarray, truth: GroundTruth) -> float:
    if truth.n_outliers == 0:
        return 0.0
    return float(np.sum(~kept & truth.labels) / truth.n_outliers)


def run_experiment(config: ExperimentConfig,
                   detectors: Optional[Dict[str, Detector]] = None) -> ReportBundle:
    return ExperimentRunner(config, detectors=detectors).run()


def run_minpts_sweep(config: ExperimentConfig, sweep: List[int]) -> Dict[int, ReportBundle]:
    """One bundle per MinPts value, all other settings unchanged"""
    bundles = {}
    for minpts in sweep:
        logger.info(f"MinPts sweep: running with MinPts={minpts}")
        bundles[minpts] = run_experiment(config.model_copy(update={"minpts": minpts}))
    return bundles
