"""Recursive feature elimination inside cross-validation."""

import logging
from collections import Counter
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..evaluation import CvSettings, LabeledDataset, PredictionStore, partition, run_work_items, stratified_kfold, weighted_f1
from ..forest import ForestConfig
from ..strategies import StrategyKind, train_strategy
from ..utils.errors import DegenerateLabelError
from ..utils.seeds import derive_seed

logger = logging.getLogger(__name__)

RFE_CONFIG_ID = "rfe"


@dataclass(frozen=True)
class RfeTrace:
    """One elimination run.

    `subsets[i]` is the feature set scored at step i (sizes d, d-1, ..., 1);
    `elimination` lists the features in the order they were removed, the
    last survivor included.
    """

    subsets: Tuple[Tuple[int, ...], ...]
    scores: Tuple[float, ...]
    elimination: Tuple[int, ...]
    chosen: Tuple[int, ...]
    feature_names: Tuple[str, ...] = ()

    @property
    def subset_sizes(self) -> List[int]:
        return [len(s) for s in self.subsets]

    @property
    def chosen_names(self) -> List[str]:
        if not self.feature_names:
            return [str(i) for i in self.chosen]
        return [self.feature_names[i] for i in self.chosen]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"subset_size": self.subset_sizes, "inner_score": list(self.scores)})


def _inner_fold(X, classes, train_idx, test_idx, kind, forest_config, distribution):
    model = train_strategy(kind, X[train_idx], classes[train_idx], forest_config, distribution)
    return model.predict_class(X[test_idx]), model.feature_importance()


def rfe_select(
    rows: np.ndarray,
    classes: Sequence[int],
    kind: StrategyKind,
    forest_config: ForestConfig,
    distribution: Sequence[int],
    inner_k: int = 3,
    seed: int = 0,
    feature_names: Optional[Sequence[str]] = None,
    n_jobs: int = 1
) -> RfeTrace:
    """Drop the least important feature until one is left; keep the best subset.

    Importance is the impurity-decrease importance averaged over the inner
    fold models. The inner folds are stratified on the 4-class label and
    redrawn while an inner training fold lacks a class.
    Equal scores prefer the smaller subset.
    """

    X = np.asarray(rows, dtype=float)
    classes = np.asarray(classes, dtype=np.int64)
    d = X.shape[1]
    if d == 0:
        raise ValueError("RFE needs at least one feature")

    try:
        folds, _ = partition(classes, inner_k, derive_seed(seed, "rfe"), 0, stream="inner partition")
    except DegenerateLabelError:
        # Only a single-member class defeats every redraw
        logger.warning("No inner partition keeps every class in every training fold, using a plain stratified draw")
        folds = stratified_kfold(classes, inner_k, derive_seed(seed, "rfe", "inner"))
    splits = [(np.flatnonzero(folds != f), np.flatnonzero(folds == f)) for f in range(inner_k)]

    remaining = list(range(d))
    subsets: List[Tuple[int, ...]] = []
    scores: List[float] = []
    elimination: List[int] = []

    while remaining:
        X_sub = X[:, remaining]
        results = run_work_items(
            _inner_fold,
            [(X_sub, classes, train, test, kind, forest_config, distribution) for train, test in splits],
            n_jobs
        )

        predicted = np.empty(len(classes), dtype=np.int64)
        for (_, test), (pred, _) in zip(splits, results):
            predicted[test] = pred
        subsets.append(tuple(remaining))
        scores.append(weighted_f1(classes, predicted))

        importance = np.mean([imp for _, imp in results], axis=0)
        worst = int(np.argmin(importance))
        elimination.append(remaining.pop(worst))

    best = max(scores)
    chosen_step = max(i for i, s in enumerate(scores) if s == best)

    logger.debug(f"RFE kept {len(subsets[chosen_step])} of {d} features (inner score {best:.4f})")

    return RfeTrace(
        subsets=tuple(subsets),
        scores=tuple(scores),
        elimination=tuple(elimination),
        chosen=tuple(sorted(subsets[chosen_step])),
        feature_names=tuple(feature_names or ())
    )


def selection_frequency(traces: Sequence[RfeTrace]) -> pd.DataFrame:
    """How often each feature name ends up in the chosen subset."""

    counts: Counter = Counter()
    seen: Dict[str, None] = {}
    for trace in traces:
        names = trace.feature_names or tuple(str(i) for i in range(len(trace.elimination)))
        for name in names:
            seen.setdefault(name, None)
        counts.update(trace.chosen_names)

    frame = pd.DataFrame({
        "feature": list(seen),
        "count": [counts.get(name, 0) for name in seen]
    })
    frame["rounds"] = len(traces)
    frame["fraction"] = frame["count"] / max(len(traces), 1)
    return frame.sort_values(["count", "feature"], ascending=[False, True], kind="mergesort").reset_index(drop=True)


@dataclass(frozen=True)
class RfeResult:
    store: PredictionStore
    traces: Tuple[RfeTrace, ...]
    frequency: pd.DataFrame

    @property
    def subset_size_range(self) -> Tuple[int, int]:
        sizes = [len(t.chosen) for t in self.traces]
        return min(sizes), max(sizes)

    def trace_table(self) -> pd.DataFrame:
        frames = []
        for round_index, trace in enumerate(self.traces):
            frame = trace.to_frame()
            frame.insert(0, "round", round_index)
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)

    def summary(self) -> Dict[str, Any]:
        low, high = self.subset_size_range
        return {
            "rounds": len(self.traces),
            "subset_size_min": low,
            "subset_size_max": high,
            "always_selected": self.frequency.loc[self.frequency["fraction"] == 1.0, "feature"].tolist()
        }


def _outer_item(dataset, folds, repeat, fold, kind, forest_config, model_seeds, inner_k, master_seed):
    train_idx = np.flatnonzero(folds != fold)
    test_idx = np.flatnonzero(folds == fold)
    transform, X_train, X_test = dataset.encode(train_idx, test_idx)
    y_train = dataset.classes[train_idx]

    trace = rfe_select(
        X_train,
        y_train,
        kind,
        forest_config.with_seed(derive_seed(master_seed, "rfe", repeat, fold)),
        dataset.distribution,
        inner_k=inner_k,
        seed=derive_seed(master_seed, "rfe", repeat, fold),
        feature_names=transform.feature_names
    )
    chosen = list(trace.chosen)

    chunks = []
    for index, seed in model_seeds:
        model = train_strategy(kind, X_train[:, chosen], y_train, forest_config.with_seed(seed), dataset.distribution)
        pair = model.predict_pair_probabilities(X_test[:, chosen])
        chunks.append(pd.DataFrame({
            "config": RFE_CONFIG_ID,
            "repeat": repeat,
            "seed": index,
            "fold": fold,
            "instance": np.asarray(dataset.ids)[test_idx],
            "true": dataset.classes[test_idx],
            "pred": model.predict_class(X_test[:, chosen]),
            "p_p": pair[:, 0],
            "p_s": pair[:, 1]
        }))
    return pd.concat(chunks, ignore_index=True), trace


def run_rfe_cv(
    dataset: LabeledDataset,
    kind: StrategyKind,
    forest_config: ForestConfig,
    settings: CvSettings,
    inner_k: int = 3,
    n_jobs: int = 1
) -> RfeResult:
    """Repeated outer CV with RFE run on every outer training fold only."""

    partitions = settings.partitions(dataset.classes)
    model_seeds = settings.model_seeds()
    items = [
        (dataset, folds, repeat, fold, kind, forest_config, model_seeds, inner_k, settings.master_seed)
        for repeat, folds in enumerate(partitions)
        for fold in range(settings.folds)
    ]
    logger.info(f"RFE over {len(items)} outer folds with {inner_k} inner folds")

    store = PredictionStore()
    traces = []
    for chunk, trace in run_work_items(_outer_item, items, n_jobs):
        store.add(chunk)
        traces.append(trace)
    store.check_coverage(dataset.ids)

    return RfeResult(store=store, traces=tuple(traces), frequency=selection_frequency(traces))
