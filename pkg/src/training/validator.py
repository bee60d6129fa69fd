"""Model validation utilities."""

import logging
from typing import Any, Dict, Optional, Sequence

import numpy as np

from ..evaluation import PredictionStore, RocCurve, classification_report, median_run, roc_curve
from ..labeling import ProgressionClass
from ..strategies import bit_targets

logger = logging.getLogger(__name__)

CLASS_LABELS = [c.display for c in ProgressionClass]


class ModelValidator:
    """Error analysis of out-of-sample predictions."""

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or {}

    def validate(
        self,
        y_true: Sequence[int],
        y_pred: Sequence[int],
        labels: Sequence[str] = CLASS_LABELS
    ) -> Dict[str, Any]:
        """Accuracy, macro/weighted F1, per-class precision and recall, confusion matrix."""

        return classification_report(y_true, y_pred, labels)

    def pair_roc(self, y_true: Sequence[int], p_p: Sequence[float], p_s: Sequence[float]) -> Dict[str, RocCurve]:
        """ROC of p(P) against the P bit and of p(S) against the S bit.

        A bit that takes a single value has no curve.
        """

        bits = bit_targets(y_true)
        curves = {}
        for name, scores, truth in (("P", p_p, bits[:, 0]), ("S", p_s, bits[:, 1])):
            if len(np.unique(truth)) < 2:
                logger.warning(f"Skipping ROC for {name}: the bit is constant")
                continue
            curves[name] = roc_curve(scores, truth)
        return curves

    def validate_median_run(self, store: PredictionStore, config: str) -> Dict[str, Any]:
        """Report for the median-score model of the median CV repeat."""

        repeat, seed = median_run(store, config)
        frame = store.for_config(config).frame
        rows = frame[(frame["repeat"] == repeat) & (frame["seed"] == seed)].sort_values("instance", kind="mergesort")

        report = self.validate(rows["true"].to_numpy(), rows["pred"].to_numpy())
        curves = self.pair_roc(rows["true"].to_numpy(), rows["p_p"].to_numpy(), rows["p_s"].to_numpy())
        report["repeat"] = int(repeat)
        report["seed"] = int(seed)
        report["auc"] = {name: curve.auc for name, curve in curves.items()}

        logger.info(
            f"Median run of {config} (repeat {repeat}, seed {seed}): weighted F1 {report['f1_weighted']:.4f}"
        )

        return report
