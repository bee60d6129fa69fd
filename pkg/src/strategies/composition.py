"""Model-composition strategies over the four progression classes."""

import logging
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Type

import numpy as np

from ..forest import ForestConfig, RandomForestModel, class_weights_from_counts, split_count_importance, train_forest
from ..labeling import ProgressionClass
from ..utils.errors import DegenerateLabelError, ModelFormatError

logger = logging.getLogger(__name__)

N_CLASSES = len(ProgressionClass)

# Bits are positive at or above this probability
BIT_THRESHOLD = 0.5


class StrategyKind(str, Enum):
    SINGLE = "single"
    ONE_VS_REST = "one_vs_rest"
    MULTILABEL = "multilabel"
    DUO = "duo"


def bit_targets(classes: Sequence[int]) -> np.ndarray:
    """(P-bit, S-bit) columns for 4-class labels."""

    classes = np.asarray(classes, dtype=np.int64)
    return np.column_stack([classes & 1, (classes >> 1) & 1])


def classes_from_bits(p_bits: np.ndarray, s_bits: np.ndarray) -> np.ndarray:
    return np.asarray(p_bits, dtype=np.int64) | (np.asarray(s_bits, dtype=np.int64) << 1)


def bit_counts(distribution: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    """Negative/positive counts of the P and S bits from 4-class counts."""

    n, p, s, ps = (int(c) for c in distribution)
    return np.array([n + s, p + ps]), np.array([n + p, s + ps])


def _require_both_values(values: np.ndarray, label: str):
    if len(np.unique(values)) < 2:
        raise DegenerateLabelError(f"Label '{label}' is constant in the training data", label=label)


class StrategyModel(ABC):
    """A trained strategy: one or more forests behind a 4-class interface."""

    kind: StrategyKind

    def __init__(self, forests: Sequence[RandomForestModel]):
        self.forests: Tuple[RandomForestModel, ...] = tuple(forests)

    @property
    def n_features(self) -> int:
        return self.forests[0].n_features

    @abstractmethod
    def predict_pair_probabilities(self, X: np.ndarray) -> np.ndarray:
        """(rows, 2) matrix of p(P), p(S)."""

    @abstractmethod
    def predict_class(self, X: np.ndarray) -> np.ndarray:
        """Progression class index per row."""

    def feature_importance(self) -> np.ndarray:
        """Mean split importance over the sub-forests."""

        return np.mean([split_count_importance(f) for f in self.forests], axis=0)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "forests": [f.to_dict() for f in self.forests]
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StrategyModel":
        try:
            kind = StrategyKind(data["kind"])
        except (KeyError, ValueError) as e:
            raise ModelFormatError(f"Unknown strategy record: {e}") from e
        forests = [RandomForestModel.from_dict(f) for f in data["forests"]]
        return _MODEL_TYPES[kind](forests)


class SingleModel(StrategyModel):
    """One 4-class forest."""

    kind = StrategyKind.SINGLE

    @property
    def forest(self) -> RandomForestModel:
        return self.forests[0]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.forest.predict_proba(X)[0]

    def predict_pair_probabilities(self, X: np.ndarray) -> np.ndarray:
        q = self.predict_proba(X)
        return np.column_stack([q[:, 1] + q[:, 3], q[:, 2] + q[:, 3]])

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


class OneVsRestModel(StrategyModel):
    """Four binary forests, class c against the rest."""

    kind = StrategyKind.ONE_VS_REST

    def positive_probabilities(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack([f.predict_proba(X)[0][:, 1] for f in self.forests])

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Positive probabilities normalized over the four classes."""

        positive = self.positive_probabilities(X)
        totals = positive.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(totals > 0, positive / totals, 1.0 / N_CLASSES)

    def predict_pair_probabilities(self, X: np.ndarray) -> np.ndarray:
        q = self.predict_proba(X)
        return np.column_stack([q[:, 1] + q[:, 3], q[:, 2] + q[:, 3]])

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.positive_probabilities(X), axis=1)


class MultiLabelModel(StrategyModel):
    """One forest with two outputs, the P and S bits."""

    kind = StrategyKind.MULTILABEL

    def predict_pair_probabilities(self, X: np.ndarray) -> np.ndarray:
        p_proba, s_proba = self.forests[0].predict_proba(X)
        return np.column_stack([p_proba[:, 1], s_proba[:, 1]])

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        pair = self.predict_pair_probabilities(X)
        return classes_from_bits(pair[:, 0] >= BIT_THRESHOLD, pair[:, 1] >= BIT_THRESHOLD)


class DuoModel(StrategyModel):
    """Independent binary forests for the P and S bits.

    Each bit is positive when its probability is at least 0.5, and the
    bit pair maps onto N, P, S or P+S.
    """

    kind = StrategyKind.DUO
    BIJECTION = {c.display: list(c.label_pair) for c in ProgressionClass}

    @property
    def p_forest(self) -> RandomForestModel:
        return self.forests[0]

    @property
    def s_forest(self) -> RandomForestModel:
        return self.forests[1]

    def predict_duo_probabilities(self, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.p_forest.predict_proba(X)[0][:, 1], self.s_forest.predict_proba(X)[0][:, 1]

    def predict_pair_probabilities(self, X: np.ndarray) -> np.ndarray:
        return np.column_stack(self.predict_duo_probabilities(X))

    def predict_class(self, X: np.ndarray) -> np.ndarray:
        p, s = self.predict_duo_probabilities(X)
        return classes_from_bits(p >= BIT_THRESHOLD, s >= BIT_THRESHOLD)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["bijection"] = self.BIJECTION
        return data


_MODEL_TYPES: Dict[StrategyKind, Type[StrategyModel]] = {
    StrategyKind.SINGLE: SingleModel,
    StrategyKind.ONE_VS_REST: OneVsRestModel,
    StrategyKind.MULTILABEL: MultiLabelModel,
    StrategyKind.DUO: DuoModel
}


def train_strategy(
    kind: StrategyKind,
    rows: np.ndarray,
    classes: Sequence[int],
    config: ForestConfig,
    distribution: Sequence[int],
    n_jobs: int = 1
) -> StrategyModel:
    """Train the forests of a strategy.

    `distribution` holds the full-dataset counts of N, P, S and P+S; every
    class weight derives from it, never from the training fold.
    """

    kind = StrategyKind(kind)
    classes = np.asarray(classes, dtype=np.int64)
    distribution = np.asarray(distribution, dtype=np.int64)
    forests: List[RandomForestModel] = []

    if kind is StrategyKind.SINGLE:
        if len(np.unique(classes)) < 2:
            raise DegenerateLabelError("Training data holds a single class", label="class")
        weights = class_weights_from_counts(distribution)
        forests.append(train_forest(rows, classes, weights, config, n_jobs=n_jobs))

    elif kind is StrategyKind.ONE_VS_REST:
        total = int(distribution.sum())
        for c in ProgressionClass:
            target = (classes == c.value).astype(np.int64)
            _require_both_values(target, c.display)
            weights = class_weights_from_counts([total - distribution[c.value], distribution[c.value]], label=c.display)
            forests.append(train_forest(rows, target, weights, config, n_jobs=n_jobs))

    else:
        bits = bit_targets(classes)
        p_counts, s_counts = bit_counts(distribution)
        _require_both_values(bits[:, 0], "P")
        _require_both_values(bits[:, 1], "S")
        p_weights = class_weights_from_counts(p_counts, label="P")
        s_weights = class_weights_from_counts(s_counts, label="S")

        if kind is StrategyKind.MULTILABEL:
            forests.append(train_forest(rows, bits, [p_weights, s_weights], config, n_jobs=n_jobs))
        else:
            forests.append(train_forest(rows, bits[:, 0], p_weights, config, n_jobs=n_jobs))
            forests.append(train_forest(rows, bits[:, 1], s_weights, config, n_jobs=n_jobs))

    logger.debug(f"Trained {kind.value} strategy with {len(forests)} forest(s) on {len(classes)} rows")

    return _MODEL_TYPES[kind](forests)


def predict_class(model: StrategyModel, X: np.ndarray) -> np.ndarray:
    return model.predict_class(X)


def predict_duo_probabilities(model: DuoModel, X: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return model.predict_duo_probabilities(X)


def predict_pair_probabilities(model: StrategyModel, X: np.ndarray) -> np.ndarray:
    return model.predict_pair_probabilities(X)


def feature_importance(model: StrategyModel) -> np.ndarray:
    return model.feature_importance()
