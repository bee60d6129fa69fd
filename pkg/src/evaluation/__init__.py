"""Scoring, cross-validation, learning curves, tuning and BBC-CV."""

from .curves import CURVE_MODES, CurvePoint, CurveSettings, curve_points, curve_table, learning_curve
from .cv import (
    ALGORITHMS,
    CvSettings,
    ScoreSummary,
    median_run,
    predict_fold,
    repeated_cv,
    run_work_items,
    score_configuration,
    summarize_scores
)
from .dataset import LabeledDataset
from .folds import balanced_subset, nested_subsets, partition, stratified_kfold
from .knn import knn_baseline, knn_pair_probabilities
from .metrics import (
    RocCurve,
    binomial_ci_median,
    classification_report,
    confusion,
    f1_from_confusion,
    lower_median_index,
    mad,
    roc_curve,
    weighted_f1
)
from .store import PredictionStore
from .tuning import (
    BbcResult,
    ParameterGrid,
    TuningResult,
    bbc_cv,
    confusion_tensor,
    grid_config_id,
    pooled_scores,
    tune_grid
)

__all__ = [
    "CURVE_MODES",
    "CurvePoint",
    "CurveSettings",
    "curve_points",
    "curve_table",
    "learning_curve",
    "ALGORITHMS",
    "CvSettings",
    "ScoreSummary",
    "median_run",
    "predict_fold",
    "repeated_cv",
    "run_work_items",
    "score_configuration",
    "summarize_scores",
    "LabeledDataset",
    "balanced_subset",
    "nested_subsets",
    "partition",
    "stratified_kfold",
    "knn_baseline",
    "knn_pair_probabilities",
    "RocCurve",
    "binomial_ci_median",
    "classification_report",
    "confusion",
    "f1_from_confusion",
    "lower_median_index",
    "mad",
    "roc_curve",
    "weighted_f1",
    "PredictionStore",
    "BbcResult",
    "ParameterGrid",
    "TuningResult",
    "bbc_cv",
    "confusion_tensor",
    "grid_config_id",
    "pooled_scores",
    "tune_grid"
]
