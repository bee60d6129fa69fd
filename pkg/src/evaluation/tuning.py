"""Hyperparameter grid search and bootstrap bias-corrected CV."""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..forest import ForestConfig
from ..strategies import StrategyKind
from ..utils.seeds import derive_rng
from .cv import CvSettings, ScoreSummary, _cv_item, run_work_items, score_configuration
from .dataset import LabeledDataset
from .metrics import f1_from_confusion
from .store import PredictionStore

logger = logging.getLogger(__name__)

N_CLASSES = 4

# Bootstraps whose out-of-bag set is empty are redrawn up to this many times
MAX_REDRAWS = 100


def grid_config_id(config: ForestConfig) -> str:
    depth = "full" if config.max_depth is None else config.max_depth
    return f"t{config.n_trees}-d{depth}-{config.criterion}"


@dataclass(frozen=True)
class ParameterGrid:
    """Cartesian grid of tree counts, depths and criteria."""

    n_trees: Tuple[int, ...] = (100, 200, 400, 600, 800, 1000)
    max_depth: Tuple[Optional[int], ...] = (4, 5, 6, 7, 8, 9, 10)
    criterion: Tuple[str, ...] = ("gini", "entropy")

    @classmethod
    def from_config(cls, section: Mapping[str, Any]) -> "ParameterGrid":
        return cls(
            n_trees=tuple(int(n) for n in section["n_trees"]),
            max_depth=tuple(None if d is None else int(d) for d in section["max_depth"]),
            criterion=tuple(section["criterion"])
        )

    def __len__(self) -> int:
        return len(self.n_trees) * len(self.max_depth) * len(self.criterion)

    def configs(self, base: ForestConfig) -> List[Tuple[str, ForestConfig]]:
        """(config id, forest config) in grid order."""

        cells = []
        for n_trees, depth, criterion in itertools.product(self.n_trees, self.max_depth, self.criterion):
            config = ForestConfig(
                n_trees=n_trees,
                max_depth=depth,
                criterion=criterion,
                min_samples_split=base.min_samples_split,
                features_per_split=base.features_per_split,
                bootstrap=base.bootstrap,
                seed=base.seed
            )
            cells.append((grid_config_id(config), config))
        return cells


@dataclass(frozen=True)
class TuningResult:
    best_id: str
    best_config: ForestConfig
    summaries: Tuple[ScoreSummary, ...]
    store: PredictionStore


def _rank_key(summary: ScoreSummary, config: ForestConfig) -> Tuple:
    depth = config.max_depth if config.max_depth is not None else np.inf
    return -summary.median, summary.mad, depth, config.n_trees


def tune_grid(
    dataset: LabeledDataset,
    kind: StrategyKind,
    grid: ParameterGrid,
    base: ForestConfig,
    settings: CvSettings,
    n_jobs: int = 1
) -> TuningResult:
    """Cross-validate every grid cell on shared partitions and model seeds.

    Best = highest median score, then lowest MAD, then lower depth, then
    fewer trees.
    """

    cells = grid.configs(base)
    partitions = settings.partitions(dataset.classes)
    model_seeds = settings.model_seeds()

    items = [
        (dataset, folds, repeat, fold, kind, config, model_seeds, config_id, "forest")
        for config_id, config in cells
        for repeat, folds in enumerate(partitions)
        for fold in range(settings.folds)
    ]
    logger.info(f"Tuning {len(cells)} configurations ({len(items)} fold work items)")

    store = PredictionStore()
    for chunk in run_work_items(_cv_item, items, n_jobs):
        store.add(chunk)
    store.check_coverage(dataset.ids)

    summaries = [score_configuration(store, config_id) for config_id, _ in cells]
    ranked = min(range(len(cells)), key=lambda i: (_rank_key(summaries[i], cells[i][1]), i))
    best_id, best_config = cells[ranked]

    logger.info(f"Best configuration {best_id}: median {summaries[ranked].median:.4f}, MAD {summaries[ranked].mad:.4f}")

    return TuningResult(best_id=best_id, best_config=best_config, summaries=tuple(summaries), store=store)


@dataclass(frozen=True)
class BbcResult:
    estimate: float
    ci_low: float
    ci_high: float
    oob_scores: Tuple[float, ...]
    selections: Dict[str, int]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "estimate": self.estimate,
            "ci_95": [self.ci_low, self.ci_high],
            "n_boot": len(self.oob_scores),
            "selections": dict(self.selections)
        }


def confusion_tensor(store: PredictionStore) -> Tuple[List[str], List[str], np.ndarray]:
    """Per-(config, instance) confusion counts over all repeats and seeds.

    Returns configs, instances and a (configs, instances, K, K) count array.
    """

    frame = store.frame
    configs = store.configs
    instances = store.instances()
    config_pos = {c: i for i, c in enumerate(configs)}
    instance_pos = {n: i for i, n in enumerate(instances)}

    tensor = np.zeros((len(configs), len(instances), N_CLASSES, N_CLASSES))
    np.add.at(
        tensor,
        (
            frame["config"].map(config_pos).to_numpy(),
            frame["instance"].map(instance_pos).to_numpy(),
            frame["true"].to_numpy(dtype=np.int64),
            frame["pred"].to_numpy(dtype=np.int64)
        ),
        1.0
    )
    return configs, instances, tensor


def bbc_cv(store: PredictionStore, n_boot: int = 1000, seed: int = 0, level: float = 0.95) -> BbcResult:
    """Bootstrap bias-corrected estimate of the tuned model's score.

    Instances are the bootstrap unit: every repeat and seed entry of a drawn
    instance is in-bag together. The winner on the in-bag entries is scored
    on the out-of-bag instances only.
    """

    configs, instances, tensor = confusion_tensor(store)
    n = len(instances)
    if n == 0:
        raise ValueError("Cannot bootstrap an empty prediction store")

    rng = derive_rng(seed, "bootstrap")
    oob_scores: List[float] = []
    selections = {c: 0 for c in configs}

    for b in range(n_boot):
        for _ in range(MAX_REDRAWS):
            multiplicity = np.bincount(rng.integers(0, n, size=n), minlength=n).astype(float)
            out_of_bag = multiplicity == 0
            if out_of_bag.any():
                break
            logger.warning(f"Bootstrap {b} left no out-of-bag instances, redrawing")
        else:
            raise ValueError(f"Could not draw a bootstrap with out-of-bag instances from {n} instances")

        in_bag = np.einsum("i,cikl->ckl", multiplicity, tensor)
        winner = int(np.argmax(f1_from_confusion(in_bag)))
        oob = np.einsum("i,ikl->kl", out_of_bag.astype(float), tensor[winner])

        oob_scores.append(float(f1_from_confusion(oob)))
        selections[configs[winner]] += 1

    alpha = (1.0 - level) / 2
    lo, hi = np.percentile(oob_scores, [100 * alpha, 100 * (1 - alpha)])

    logger.info(f"BBC-CV over {len(configs)} configurations: estimate {np.mean(oob_scores):.4f} [{lo:.4f}, {hi:.4f}]")

    return BbcResult(
        estimate=float(np.mean(oob_scores)),
        ci_low=float(lo),
        ci_high=float(hi),
        oob_scores=tuple(oob_scores),
        selections=selections
    )


def pooled_scores(store: PredictionStore) -> Dict[str, float]:
    """Weighted F1 of each configuration over all of its entries."""

    configs, _, tensor = confusion_tensor(store)
    scores = f1_from_confusion(tensor.sum(axis=1))
    return {c: float(s) for c, s in zip(configs, scores)}
