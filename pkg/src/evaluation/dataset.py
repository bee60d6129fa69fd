"""Labeled, filtered periods ready for cross-validation."""

from dataclasses import dataclass, replace
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..cohort.table import AttributeMeta
from ..labeling import ProgressionClass
from ..preprocess import FittedTransform, PreprocessPlan, fit_transform

N_CLASSES = len(ProgressionClass)


@dataclass(frozen=True)
class LabeledDataset:
    """Raw (unimputed) start-of-period features with progression classes.

    Transforms are fitted per training fold through `encode`, so nothing
    here is derived from test rows.
    """

    frame: pd.DataFrame
    classes: np.ndarray
    attributes: Mapping[str, AttributeMeta]
    plan: PreprocessPlan = PreprocessPlan()

    def __post_init__(self):
        if len(self.frame) != len(self.classes):
            raise ValueError(f"{len(self.frame)} rows but {len(self.classes)} classes")

    @property
    def ids(self) -> List[str]:
        return [str(i) for i in self.frame.index]

    @property
    def n_instances(self) -> int:
        return len(self.frame)

    @property
    def distribution(self) -> np.ndarray:
        return np.bincount(np.asarray(self.classes, dtype=np.int64), minlength=N_CLASSES)

    def with_plan(self, plan: PreprocessPlan) -> "LabeledDataset":
        return replace(self, plan=plan)

    def subset(self, rows: Sequence[int]) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(self, frame=self.frame.iloc[rows], classes=np.asarray(self.classes)[rows])

    def fit(self, train_idx: Sequence[int]) -> FittedTransform:
        return fit_transform(self.frame.iloc[np.asarray(train_idx)], self.attributes, self.plan)

    def encode(
        self,
        train_idx: Sequence[int],
        test_idx: Optional[Sequence[int]] = None
    ) -> Tuple[FittedTransform, np.ndarray, Optional[np.ndarray]]:
        """Fit on the training rows, then encode training and test rows."""

        transform = self.fit(train_idx)
        X_train = transform.apply(self.frame.iloc[np.asarray(train_idx)])
        X_test = None
        if test_idx is not None:
            X_test = transform.apply(self.frame.iloc[np.asarray(test_idx)])
        return transform, X_train, X_test
