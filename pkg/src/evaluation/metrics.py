"""Scores, confidence intervals and ROC curves."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy.stats import binom, median_abs_deviation
from sklearn.metrics import (
    accuracy_score,
    auc,
    confusion_matrix,
    f1_score,
    precision_score,
    recall_score,
    roc_curve as sk_roc_curve
)

logger = logging.getLogger(__name__)


def weighted_f1(true: Sequence[int], predicted: Sequence[int]) -> float:
    """Support-weighted mean of per-class F1; undefined classes score 0."""

    true = np.asarray(true)
    predicted = np.asarray(predicted)
    if len(true) == 0:
        raise ValueError("Cannot score an empty prediction set")
    if len(true) != len(predicted):
        raise ValueError(f"{len(true)} true labels but {len(predicted)} predictions")
    return float(f1_score(true, predicted, average="weighted", zero_division=0))


def confusion(true: Sequence[int], predicted: Sequence[int], n_classes: int = 4) -> np.ndarray:
    """K x K counts, rows true and columns predicted."""

    return confusion_matrix(true, predicted, labels=list(range(n_classes)))


def f1_from_confusion(matrix: np.ndarray) -> np.ndarray:
    """Weighted F1 of one confusion matrix or a stack of them (..., K, K)."""

    matrix = np.asarray(matrix, dtype=float)
    tp = np.diagonal(matrix, axis1=-2, axis2=-1)
    support = matrix.sum(axis=-1)
    predicted = matrix.sum(axis=-2)

    with np.errstate(invalid="ignore", divide="ignore"):
        precision = np.where(predicted > 0, tp / predicted, 0.0)
        recall = np.where(support > 0, tp / support, 0.0)
        f1 = np.where(precision + recall > 0, 2 * precision * recall / (precision + recall), 0.0)
        total = support.sum(axis=-1)
        return np.where(total > 0, (f1 * support).sum(axis=-1) / total, 0.0)


def classification_report(true: Sequence[int], predicted: Sequence[int], labels: Sequence[str]) -> Dict[str, Any]:
    """Accuracy, macro/weighted F1, per-class precision/recall and confusion matrix."""

    true = np.asarray(true)
    predicted = np.asarray(predicted)
    indices = list(range(len(labels)))

    precision = precision_score(true, predicted, labels=indices, average=None, zero_division=0)
    recall = recall_score(true, predicted, labels=indices, average=None, zero_division=0)
    f1 = f1_score(true, predicted, labels=indices, average=None, zero_division=0)
    support = np.bincount(true, minlength=len(labels))

    return {
        "accuracy": float(accuracy_score(true, predicted)),
        "f1_macro": float(f1_score(true, predicted, labels=indices, average="macro", zero_division=0)),
        "f1_weighted": weighted_f1(true, predicted),
        "per_class": {
            label: {
                "precision": float(precision[i]),
                "recall": float(recall[i]),
                "f1": float(f1[i]),
                "support": int(support[i])
            }
            for i, label in enumerate(labels)
        },
        "confusion_matrix": confusion(true, predicted, len(labels)).tolist()
    }


def binomial_ci_median(values: Sequence[float], level: float = 0.95) -> Tuple[float, float]:
    """Order-statistic confidence interval around the median.

    The bounds are the order statistics whose 1-based ranks are the
    binomial(n, 0.5) quantiles at (1 - level)/2 and (1 + level)/2.
    """

    ordered = np.sort(np.asarray(values, dtype=float))
    n = len(ordered)
    if n == 0:
        raise ValueError("Cannot build a confidence interval from no values")

    alpha = 1.0 - level
    lo = int(binom.ppf(alpha / 2, n, 0.5))
    hi = int(binom.ppf(1 - alpha / 2, n, 0.5))
    lo = min(max(lo, 1), n)
    hi = min(max(hi, 1), n)

    return float(ordered[lo - 1]), float(ordered[hi - 1])


def mad(values: Sequence[float]) -> float:
    """Unscaled median absolute deviation."""

    return float(median_abs_deviation(np.asarray(values, dtype=float), scale=1.0))


def lower_median_index(values: Sequence[float]) -> int:
    """Position of the lower median; among equal values the first position."""

    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="mergesort")
    return int(order[(len(values) - 1) // 2])


@dataclass(frozen=True)
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "auc": self.auc,
            "fpr": self.fpr.tolist(),
            "tpr": self.tpr.tolist()
        }


def roc_curve(scores: Sequence[float], truth: Sequence[int]) -> RocCurve:
    """ROC points at every distinct score plus the trapezoid AUC."""

    truth = np.asarray(truth, dtype=int)
    if len(np.unique(truth)) < 2:
        raise ValueError("ROC needs both positive and negative instances")

    fpr, tpr, thresholds = sk_roc_curve(truth, np.asarray(scores, dtype=float), drop_intermediate=False)
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds, auc=float(auc(fpr, tpr)))
