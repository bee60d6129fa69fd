"""Random forests of class-weighted CART trees."""

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from ..utils.errors import ConfigError, ModelFormatError
from ..utils.seeds import derive_seed
from .impurity import CRITERIA
from .tree import DecisionTree, TreeBuilder

logger = logging.getLogger(__name__)

FeatureRule = Union[str, int, float, None]


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyperparameters plus the seed of the tree streams."""

    n_trees: int = 100
    max_depth: Optional[int] = None
    criterion: str = "gini"
    min_samples_split: int = 2
    features_per_split: FeatureRule = "sqrt"
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be positive, got {self.n_trees}")
        if self.max_depth is not None and self.max_depth < 1:
            raise ConfigError(f"max_depth must be positive or None, got {self.max_depth}")
        if self.criterion not in CRITERIA:
            raise ConfigError(f"criterion must be one of {CRITERIA}, got {self.criterion!r}")
        if self.min_samples_split < 2:
            raise ConfigError(f"min_samples_split must be at least 2, got {self.min_samples_split}")

    @classmethod
    def from_config(cls, section: Mapping[str, Any], seed: int = 0) -> "ForestConfig":
        max_depth = section.get("max_depth")
        return cls(
            n_trees=int(section.get("n_trees", 100)),
            max_depth=None if max_depth is None else int(max_depth),
            criterion=str(section.get("criterion", "gini")),
            min_samples_split=int(section.get("min_samples_split", 2)),
            features_per_split=section.get("features_per_split", "sqrt"),
            bootstrap=bool(section.get("bootstrap", True)),
            seed=int(seed)
        )

    def with_seed(self, seed: int) -> "ForestConfig":
        return replace(self, seed=int(seed))

    def max_features(self, n_features: int) -> int:
        rule = self.features_per_split
        if rule is None or rule == "all":
            return n_features
        if rule == "sqrt":
            return max(1, int(math.floor(math.sqrt(n_features))))
        if rule == "log2":
            return max(1, int(math.floor(math.log2(n_features)))) if n_features > 1 else 1
        if isinstance(rule, float) and 0.0 < rule <= 1.0:
            return max(1, int(rule * n_features))
        if isinstance(rule, int) and rule >= 1:
            return min(rule, n_features)
        raise ConfigError(f"Unsupported features_per_split rule {rule!r}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "criterion": self.criterion,
            "min_samples_split": self.min_samples_split,
            "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap,
            "seed": self.seed
        }


def _as_targets(targets: np.ndarray) -> np.ndarray:
    Y = np.asarray(targets, dtype=np.int64)
    return Y[:, None] if Y.ndim == 1 else Y


def _builder(config: ForestConfig, n_features: int, n_classes: Sequence[int], weights: Sequence[np.ndarray]) -> TreeBuilder:
    return TreeBuilder(
        n_classes=n_classes,
        class_weights=weights,
        criterion=config.criterion,
        max_depth=config.max_depth,
        min_samples_split=config.min_samples_split,
        max_features=config.max_features(n_features)
    )


def _normalize_weights(weights: Any, n_outputs: int) -> List[np.ndarray]:
    if n_outputs == 1 and np.ndim(weights[0]) == 0:
        return [np.asarray(weights, dtype=float)]
    return [np.asarray(w, dtype=float) for w in weights]


def train_tree(
    rows: np.ndarray,
    targets: np.ndarray,
    weights: Any,
    config: ForestConfig,
    rng: np.random.Generator
) -> DecisionTree:
    """Grow one tree on all rows (no bootstrap)."""

    X = np.asarray(rows, dtype=float)
    Y = _as_targets(targets)
    class_weights = _normalize_weights(weights, Y.shape[1])
    n_classes = [len(w) for w in class_weights]
    return _builder(config, X.shape[1], n_classes, class_weights).build(X, Y, rng)


def _fit_member(builder: TreeBuilder, X: np.ndarray, Y: np.ndarray, seed: int, bootstrap: bool) -> DecisionTree:
    rng = np.random.default_rng(seed)
    multiplicity = None
    if bootstrap:
        draws = rng.integers(0, len(X), size=len(X))
        multiplicity = np.bincount(draws, minlength=len(X)).astype(float)
    return builder.build(X, Y, rng, multiplicity)


@dataclass(frozen=True)
class RandomForestModel:
    """Trained forest; immutable.

    `n_classes` lists the number of classes of each output. Single-output
    forests predict a vector, multi-output forests a (rows, outputs) matrix.
    """

    trees: Tuple[DecisionTree, ...]
    config: ForestConfig
    n_features: int
    n_classes: Tuple[int, ...]
    class_weights: Tuple[Tuple[float, ...], ...] = field(default_factory=tuple)
    tree_seeds: Tuple[int, ...] = field(default_factory=tuple)

    @property
    def n_outputs(self) -> int:
        return len(self.n_classes)

    def _check_rows(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"Row width {X.shape[1]} does not match the model's {self.n_features} features")
        return X

    def predict_proba(self, X: np.ndarray) -> List[np.ndarray]:
        """Mean of the trees' leaf class proportions, one matrix per output."""

        X = self._check_rows(X)
        totals = [np.zeros((len(X), k)) for k in self.n_classes]
        for tree in self.trees:
            for o, proba in enumerate(tree.predict_proba(X)):
                totals[o] += proba
        return [t / len(self.trees) for t in totals]

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Argmax class per output; ties go to the lowest class index."""

        labels = np.column_stack([np.argmax(p, axis=1) for p in self.predict_proba(X)])
        return labels[:, 0] if self.n_outputs == 1 else labels

    @property
    def feature_importances(self) -> np.ndarray:
        return split_count_importance(self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "n_features": self.n_features,
            "n_classes": list(self.n_classes),
            "class_weights": [list(w) for w in self.class_weights],
            "tree_seeds": list(self.tree_seeds),
            "trees": [tree.to_dict() for tree in self.trees]
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RandomForestModel":
        try:
            section = dict(data["config"])
            seed = section.pop("seed", 0)
            return cls(
                trees=tuple(DecisionTree.from_dict(t) for t in data["trees"]),
                config=ForestConfig.from_config(section, seed=seed),
                n_features=int(data["n_features"]),
                n_classes=tuple(int(k) for k in data["n_classes"]),
                class_weights=tuple(tuple(float(v) for v in w) for w in data.get("class_weights", [])),
                tree_seeds=tuple(int(s) for s in data.get("tree_seeds", []))
            )
        except (KeyError, TypeError) as e:
            raise ModelFormatError(f"Malformed forest record: {e}") from e


def train_forest(
    rows: np.ndarray,
    targets: np.ndarray,
    weights: Any,
    config: ForestConfig,
    n_jobs: int = 1
) -> RandomForestModel:
    """Train `config.n_trees` trees, each on its own bootstrap sample.

    `targets` holds class indices, (rows,) or (rows, outputs); `weights`
    gives one class-weight vector per output. Tree i is seeded from
    (config.seed, "tree", i) so the worker count never changes the model.
    """

    X = np.asarray(rows, dtype=float)
    Y = _as_targets(targets)
    if len(X) != len(Y):
        raise ValueError(f"{len(X)} rows but {len(Y)} targets")

    class_weights = _normalize_weights(weights, Y.shape[1])
    n_classes = [len(w) for w in class_weights]
    builder = _builder(config, X.shape[1], n_classes, class_weights)
    seeds = [derive_seed(config.seed, "tree", i) for i in range(config.n_trees)]

    if n_jobs == 1:
        trees = [_fit_member(builder, X, Y, s, config.bootstrap) for s in seeds]
    else:
        trees = Parallel(n_jobs=n_jobs)(
            delayed(_fit_member)(builder, X, Y, s, config.bootstrap) for s in seeds
        )

    logger.debug(
        f"Trained {config.n_trees} trees on {len(X)} rows x {X.shape[1]} features "
        f"(mean depth {np.mean([t.depth for t in trees]):.1f})"
    )

    return RandomForestModel(
        trees=tuple(trees),
        config=config,
        n_features=X.shape[1],
        n_classes=tuple(n_classes),
        class_weights=tuple(tuple(float(v) for v in w) for w in class_weights),
        tree_seeds=tuple(seeds)
    )


def forest_from_trees(trees: Sequence[DecisionTree], n_features: int) -> RandomForestModel:
    """Wrap hand-built trees in a model."""

    if not trees:
        raise ValueError("A forest needs at least one tree")
    return RandomForestModel(
        trees=tuple(trees),
        config=ForestConfig(n_trees=len(trees), bootstrap=False),
        n_features=n_features,
        n_classes=trees[0].n_classes
    )


def split_count_importance(model: RandomForestModel) -> np.ndarray:
    """Impurity-decrease importance, normalized per tree then over the forest."""

    total = np.zeros(model.n_features)
    for tree in model.trees:
        per_tree = np.zeros(model.n_features)
        internal = ~tree.is_leaf
        np.add.at(per_tree, tree.feature[internal], tree.improvement[internal])
        if per_tree.sum() > 0:
            total += per_tree / per_tree.sum()
    total /= len(model.trees)
    if total.sum() > 0:
        total /= total.sum()
    return total
