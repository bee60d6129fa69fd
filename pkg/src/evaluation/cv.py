"""Repeated stratified cross-validation with pooled predictions."""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from ..forest import ForestConfig
from ..strategies import StrategyKind, train_strategy
from ..utils.seeds import derive_seed
from .dataset import LabeledDataset
from .folds import partition
from .knn import knn_pair_probabilities
from .metrics import binomial_ci_median, lower_median_index, mad
from .store import PredictionStore

logger = logging.getLogger(__name__)

ALGORITHMS = ("forest", "knn")


@dataclass(frozen=True)
class CvSettings:
    repeats: int = 10
    folds: int = 10
    seeds: int = 25
    master_seed: int = 0

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> "CvSettings":
        section = config["cv"]
        return cls(
            repeats=int(section["repeats"]),
            folds=int(section["folds"]),
            seeds=int(section["seeds"]),
            master_seed=int(config["seed"])
        )

    def model_seeds(self) -> List[Tuple[int, int]]:
        """(index, seed) pairs shared by every fold and repeat."""

        return [(s, derive_seed(self.master_seed, "model", s)) for s in range(self.seeds)]

    def partitions(self, classes: Sequence[int]) -> List[np.ndarray]:
        return [partition(classes, self.folds, self.master_seed, r)[0] for r in range(self.repeats)]


def predict_fold(
    dataset: LabeledDataset,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    kind: StrategyKind,
    forest_config: ForestConfig,
    model_seeds: Sequence[Tuple[int, int]],
    algorithm: str = "forest"
) -> pd.DataFrame:
    """Fit the fold transform once, then one model per seed on the training rows."""

    _, X_train, X_test = dataset.encode(train_idx, test_idx)
    y_train = dataset.classes[train_idx]
    y_test = dataset.classes[test_idx]
    ids = np.asarray(dataset.ids)[test_idx]

    chunks = []
    for index, seed in model_seeds:
        if algorithm == "knn":
            pred, pair = knn_pair_probabilities(X_train, y_train, X_test)
        else:
            model = train_strategy(kind, X_train, y_train, forest_config.with_seed(seed), dataset.distribution)
            pred = model.predict_class(X_test)
            pair = model.predict_pair_probabilities(X_test)

        chunks.append(pd.DataFrame({
            "seed": index,
            "instance": ids,
            "true": y_test,
            "pred": pred,
            "p_p": pair[:, 0],
            "p_s": pair[:, 1]
        }))

    return pd.concat(chunks, ignore_index=True)


def run_work_items(work: Callable, items: Sequence[Tuple], n_jobs: int = 1) -> List[Any]:
    """Apply `work` to every argument tuple; results keep the item order."""

    if n_jobs == 1 or len(items) <= 1:
        return [work(*args) for args in items]
    return Parallel(n_jobs=n_jobs)(delayed(work)(*args) for args in items)


def _cv_item(dataset, folds, repeat, fold, kind, forest_config, model_seeds, config_id, algorithm) -> pd.DataFrame:
    train_idx = np.flatnonzero(folds != fold)
    test_idx = np.flatnonzero(folds == fold)
    chunk = predict_fold(dataset, train_idx, test_idx, kind, forest_config, model_seeds, algorithm)
    chunk.insert(0, "config", config_id)
    chunk.insert(1, "repeat", repeat)
    chunk.insert(3, "fold", fold)
    return chunk


def repeated_cv(
    dataset: LabeledDataset,
    kind: StrategyKind,
    forest_config: ForestConfig,
    settings: CvSettings,
    config_id: str = "default",
    n_jobs: int = 1,
    partitions: Optional[List[np.ndarray]] = None
) -> PredictionStore:
    """Out-of-sample predictions of every (repeat, fold, seed) model.

    Model seeds stay constant across folds and repeats; partitions differ
    per repeat.
    """

    partitions = partitions if partitions is not None else settings.partitions(dataset.classes)
    model_seeds = settings.model_seeds()

    items = [
        (dataset, folds, repeat, fold, kind, forest_config, model_seeds, config_id, "forest")
        for repeat, folds in enumerate(partitions)
        for fold in range(settings.folds)
    ]
    logger.info(
        f"Cross-validating '{config_id}': {settings.repeats} repeats x {settings.folds} folds x "
        f"{settings.seeds} seeds on {dataset.n_instances} instances"
    )

    store = PredictionStore()
    for chunk in run_work_items(_cv_item, items, n_jobs):
        store.add(chunk)
    store.check_coverage(dataset.ids)

    return store


@dataclass(frozen=True)
class ScoreSummary:
    """Median over repeats of the per-repeat median model score."""

    config: str
    median: float
    ci_low: float
    ci_high: float
    mad: float
    repeat_medians: Tuple[float, ...]
    min_score: float
    max_score: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config,
            "median": self.median,
            "ci_95": [self.ci_low, self.ci_high],
            "mad": self.mad,
            "min": self.min_score,
            "max": self.max_score,
            "repeat_medians": list(self.repeat_medians)
        }


def summarize_scores(scores: pd.DataFrame, config: str) -> ScoreSummary:
    """Summary of a (repeat, seed, score) frame."""

    if scores.empty:
        raise KeyError(f"No scores for configuration '{config}'")

    repeat_medians = scores.groupby("repeat", sort=True)["score"].median().to_numpy()
    lo, hi = binomial_ci_median(repeat_medians)

    return ScoreSummary(
        config=config,
        median=float(np.median(repeat_medians)),
        ci_low=lo,
        ci_high=hi,
        mad=mad(repeat_medians),
        repeat_medians=tuple(float(v) for v in repeat_medians),
        min_score=float(scores["score"].min()),
        max_score=float(scores["score"].max())
    )


def score_configuration(store: PredictionStore, config: str) -> ScoreSummary:
    scores = store.model_scores()
    return summarize_scores(scores[scores["config"] == config], config)


def median_run(store: PredictionStore, config: str) -> Tuple[int, int]:
    """(repeat, seed) of the median model in the median repeat.

    Lower medians on even counts; equal scores resolve to the lowest index.
    """

    scores = store.model_scores()
    scores = scores[scores["config"] == config].sort_values(["repeat", "seed"])
    if scores.empty:
        raise KeyError(f"No scores for configuration '{config}'")

    per_repeat = scores.groupby("repeat", sort=True)["score"].median()
    repeat = int(per_repeat.index[lower_median_index(per_repeat.to_numpy())])

    in_repeat = scores[scores["repeat"] == repeat]
    seed = int(in_repeat["seed"].iloc[lower_median_index(in_repeat["score"].to_numpy())])

    return repeat, seed
