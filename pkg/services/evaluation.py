"""
Evaluation Service
Turns score vectors into predictions and the four reported numbers:
accuracy, precision, recall and ROC AUC
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field
from scipy.stats import rankdata

from scoring.points import GroundTruth, InputError, ScoreVector

logger = logging.getLogger(__name__)

PRECISION_UNDEFINED = "precision_undefined"
RECALL_UNDEFINED = "recall_undefined"


@dataclass(frozen=True)
class DecisionRule:
    """Either flag score > threshold, or flag the top_n highest scores"""
    kind: str
    value: float

    def __post_init__(self):
        if self.kind == "threshold":
            if not self.value >= 0:
                raise InputError(f"Threshold must be >= 0, got {self.value}")
        elif self.kind == "top_n":
            if self.value != int(self.value) or self.value < 1:
                raise InputError(f"top_n must be a positive integer, got {self.value}")
            object.__setattr__(self, "value", int(self.value))
        else:
            raise InputError(f"Unknown decision rule '{self.kind}' (expected threshold or top_n)")

    @classmethod
    def threshold(cls, t: float = 1.0) -> "DecisionRule":
        return cls("threshold", float(t))

    @classmethod
    def top_n(cls, n: int) -> "DecisionRule":
        return cls("top_n", n)

    @classmethod
    def parse(cls, text: str) -> "DecisionRule":
        """'threshold:1.0' or 'top_n:50'"""
        kind, sep, raw = text.strip().partition(":")
        if not sep:
            raise InputError(f"Decision rule must look like 'threshold:1.0' or 'top_n:50', got '{text}'")
        try:
            value = float(raw)
        except ValueError:
            raise InputError(f"Decision rule value is not a number: '{raw}'")
        return cls(kind.strip(), value)

    def __str__(self) -> str:
        return f"{self.kind}:{self.value}"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def binarize(scores: ScoreVector, rule: DecisionRule) -> np.ndarray:
    values = scores.scores if isinstance(scores, ScoreVector) else np.asarray(scores, dtype=np.float64)
    if rule.kind == "threshold":
        return values > rule.value

    n = int(rule.value)
    if n > values.size:
        raise InputError(f"top_n={n} exceeds the number of points ({values.size})")
    # highest score first, ties by ascending id
    order = np.lexsort((np.arange(values.size), -values))
    predictions = np.zeros(values.size, dtype=bool)
    predictions[order[:n]] = True
    return predictions


def confusion(predictions: np.ndarray, truth: GroundTruth) -> ConfusionCounts:
    predictions = np.asarray(predictions, dtype=bool)
    labels = truth.labels
    if predictions.shape != labels.shape:
        raise InputError(f"{predictions.size} predictions for {labels.size} labels")
    return ConfusionCounts(
        tp=int(np.sum(predictions & labels)),
        fp=int(np.sum(predictions & ~labels)),
        tn=int(np.sum(~predictions & ~labels)),
        fn=int(np.sum(~predictions & labels)),
    )


def accuracy(counts: ConfusionCounts) -> float:
    return (counts.tp + counts.tn) / counts.total if counts.total else 0.0


def precision(counts: ConfusionCounts) -> float:
    denominator = counts.tp + counts.fp
    return counts.tp / denominator if denominator else 0.0


def recall(counts: ConfusionCounts) -> float:
    denominator = counts.tp + counts.fn
    return counts.tp / denominator if denominator else 0.0


def roc_auc(scores: ScoreVector, truth: GroundTruth) -> float:
    """
    Mann-Whitney statistic: fraction of (outlier, inlier) pairs where the
    outlier scores higher, ties counting one half
    """
    values = scores.scores if isinstance(scores, ScoreVector) else np.asarray(scores, dtype=np.float64)
    truth.check_aligned(values.size)
    if not truth.has_both_classes:
        raise InputError("AUC needs at least one outlier and one inlier")

    labels = truth.labels
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    ranks = rankdata(values, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class MetricSample:
    """Metrics of a single scored run"""
    accuracy: float
    precision: float
    recall: float
    auc: float
    flags: List[str] = field(default_factory=list)


def evaluate(scores: ScoreVector, truth: GroundTruth, rule: DecisionRule) -> MetricSample:
    truth.check_aligned(len(scores))
    counts = confusion(binarize(scores, rule), truth)
    flags = []
    if counts.tp + counts.fp == 0:
        flags.append(PRECISION_UNDEFINED)
    if counts.tp + counts.fn == 0:
        flags.append(RECALL_UNDEFINED)
    if flags:
        logger.debug(f"Zero denominators reported as 0: {', '.join(flags)}")
    return MetricSample(
        accuracy=accuracy(counts),
        precision=precision(counts),
        recall=recall(counts),
        auc=roc_auc(scores, truth),
        flags=flags,
    )


class EvalReport(BaseModel):
    """Averaged metrics of one detector on one dataset"""

    dataset: str
    detector: str
    accuracy: float = Field(0.0, ge=0.0, le=1.0)
    precision: float = Field(0.0, ge=0.0, le=1.0)
    recall: float = Field(0.0, ge=0.0, le=1.0)
    auc: float = Field(0.0, ge=0.0, le=1.0)
    elapsed_seconds: float = Field(0.0, ge=0.0)
    elapsed_variance: float = Field(0.0, ge=0.0)
    auc_variance: float = Field(0.0, ge=0.0)
    prune_rate: Optional[float] = None
    outliers_pruned: Optional[float] = None
    repetitions: int = Field(0, ge=0)
    minpts: int
    seeds: List[int] = Field(default_factory=list)
    rule: str
    params: Dict[str, str] = Field(default_factory=dict)
    flags: List[str] = Field(default_factory=list)
    error: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def metric(self, name: str) -> Optional[float]:
        if self.failed:
            return None
        return getattr(self, name)
