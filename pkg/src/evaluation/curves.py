"""Learning curves over nested training subsets."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..forest import ForestConfig
from ..preprocess import PreprocessPlan
from ..strategies import StrategyKind
from ..utils.errors import ConfigError
from ..utils.seeds import derive_rng, derive_seed
from .cv import ALGORITHMS, CvSettings, predict_fold, run_work_items, summarize_scores
from .dataset import LabeledDataset
from .folds import balanced_subset, nested_subsets
from .metrics import mad
from .store import PredictionStore

logger = logging.getLogger(__name__)

CURVE_MODES = ("full_imbalanced", "balanced_downsample")


@dataclass(frozen=True)
class CurveSettings:
    fractions: Tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
    mode: str = "full_imbalanced"
    n_samples: int = 11
    class_size: Optional[int] = None
    algorithm: str = "forest"

    def __post_init__(self):
        if self.mode not in CURVE_MODES:
            raise ConfigError(f"Curve mode must be one of {CURVE_MODES}, got {self.mode!r}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"Curve algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")

    @classmethod
    def from_config(cls, section: Mapping[str, Any]) -> "CurveSettings":
        class_size = section.get("class_size")
        return cls(
            fractions=tuple(float(f) for f in section["fractions"]),
            mode=section["mode"],
            n_samples=int(section["n_samples"]),
            class_size=None if class_size is None else int(class_size),
            algorithm=section.get("algorithm", "forest")
        )

    @property
    def samples(self) -> int:
        return self.n_samples if self.mode == "balanced_downsample" else 1


@dataclass(frozen=True)
class CurvePoint:
    fraction: float
    median: float
    mad: float
    min_score: float
    max_score: float
    sample_medians: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "fraction": self.fraction,
            "median": self.median,
            "mad": self.mad,
            "min": self.min_score,
            "max": self.max_score,
            "sample_medians": list(self.sample_medians)
        }


def curve_config_id(mode: str, fraction: float, sample: int) -> str:
    return f"{mode}:{fraction:g}:{sample}"


def _parse_config_id(config_id: str) -> Tuple[str, float, int]:
    mode, fraction, sample = config_id.split(":")
    return mode, float(fraction), int(sample)


def _training_subsets(
    classes: np.ndarray,
    train_idx: np.ndarray,
    curve: CurveSettings,
    class_size: Optional[int],
    master_seed: int,
    repeat: int,
    fold: int
) -> List[Tuple[int, Dict[float, np.ndarray]]]:
    if curve.mode == "full_imbalanced":
        seed = derive_seed(master_seed, "curve", repeat, fold)
        return [(0, nested_subsets(train_idx, classes, curve.fractions, seed))]

    subsets = []
    for sample in range(curve.samples):
        rng = derive_rng(master_seed, "balanced", repeat, fold, sample)
        balanced = balanced_subset(train_idx, classes, class_size, rng)
        seed = derive_seed(master_seed, "curve", repeat, fold, sample)
        subsets.append((sample, nested_subsets(balanced, classes, curve.fractions, seed)))
    return subsets


def _curve_item(dataset, folds, repeat, fold, kind, forest_config, model_seeds, curve, class_size, master_seed):
    train_idx = np.flatnonzero(folds != fold)
    test_idx = np.flatnonzero(folds == fold)

    chunks = []
    for sample, subsets in _training_subsets(dataset.classes, train_idx, curve, class_size, master_seed, repeat, fold):
        for fraction in curve.fractions:
            chunk = predict_fold(dataset, subsets[fraction], test_idx, kind, forest_config, model_seeds, curve.algorithm)
            chunk.insert(0, "config", curve_config_id(curve.mode, fraction, sample))
            chunk.insert(1, "repeat", repeat)
            chunk.insert(3, "fold", fold)
            chunks.append(chunk)
    return pd.concat(chunks, ignore_index=True)


def smallest_class(classes: np.ndarray, partitions: Sequence[np.ndarray], k: int) -> int:
    """Fewest members any class has in any training fold."""

    present = np.unique(classes)
    sizes = []
    for folds in partitions:
        for fold in range(k):
            train = classes[folds != fold]
            sizes.extend(int(np.sum(train == c)) for c in present)
    return min(sizes)


def learning_curve(
    dataset: LabeledDataset,
    kind: StrategyKind,
    forest_config: ForestConfig,
    settings: CvSettings,
    curve: CurveSettings,
    n_jobs: int = 1
) -> Tuple[List[CurvePoint], PredictionStore]:
    """Scores at growing training fractions.

    Test folds are the repeated-CV partitions in every mode. Balanced mode
    draws `n_samples` class-balanced subsets of each training fold; kNN runs
    on min-max scaled features with a single (deterministic) model.
    """

    partitions = settings.partitions(dataset.classes)

    if curve.algorithm == "knn":
        dataset = dataset.with_plan(PreprocessPlan(
            attr_missing_threshold=dataset.plan.attr_missing_threshold,
            row_missing_threshold=dataset.plan.row_missing_threshold,
            scaling=True
        ))
        model_seeds = [(0, 0)]
    else:
        model_seeds = settings.model_seeds()

    class_size = None
    if curve.mode == "balanced_downsample":
        available = smallest_class(dataset.classes, partitions, settings.folds)
        class_size = curve.class_size or available
        if class_size > available:
            raise ConfigError(f"curve.class_size {class_size} exceeds the smallest training class ({available})")

    items = [
        (dataset, folds, repeat, fold, kind, forest_config, model_seeds, curve, class_size, settings.master_seed)
        for repeat, folds in enumerate(partitions)
        for fold in range(settings.folds)
    ]
    logger.info(
        f"Learning curve ({curve.mode}, {curve.algorithm}): {len(curve.fractions)} fractions x "
        f"{curve.samples} samples x {len(items)} folds"
    )

    store = PredictionStore()
    for chunk in run_work_items(_curve_item, items, n_jobs):
        store.add(chunk)
    store.check_coverage(dataset.ids)

    return curve_points(store), store


def curve_points(store: PredictionStore) -> List[CurvePoint]:
    """Aggregate a curve store into one point per fraction."""

    scores = store.model_scores()
    parsed = scores["config"].map(_parse_config_id)
    scores = scores.assign(
        fraction=[p[1] for p in parsed],
        sample=[p[2] for p in parsed]
    )

    points = []
    for fraction, at_fraction in scores.groupby("fraction", sort=True):
        sample_medians = []
        repeat_medians = []
        for config, group in at_fraction.groupby("config", sort=False):
            summary = summarize_scores(group, config)
            sample_medians.append(summary.median)
            repeat_medians.extend(summary.repeat_medians)
        points.append(CurvePoint(
            fraction=float(fraction),
            median=float(np.median(sample_medians)),
            mad=mad(repeat_medians),
            min_score=float(at_fraction["score"].min()),
            max_score=float(at_fraction["score"].max()),
            sample_medians=tuple(sample_medians)
        ))
    return points


def curve_table(points: Sequence[CurvePoint]) -> pd.DataFrame:
    """Plot-ready (fraction, median, mad, min, max) table."""

    return pd.DataFrame(
        [(p.fraction, p.median, p.mad, p.min_score, p.max_score) for p in points],
        columns=["fraction", "median", "mad", "min", "max"]
    )
