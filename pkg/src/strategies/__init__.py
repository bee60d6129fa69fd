"""Single, one-vs-rest, multi-label and duo model compositions."""

from .composition import (
    BIT_THRESHOLD,
    DuoModel,
    MultiLabelModel,
    OneVsRestModel,
    SingleModel,
    StrategyKind,
    StrategyModel,
    bit_counts,
    bit_targets,
    classes_from_bits,
    feature_importance,
    predict_class,
    predict_duo_probabilities,
    predict_pair_probabilities,
    train_strategy
)

__all__ = [
    "BIT_THRESHOLD",
    "DuoModel",
    "MultiLabelModel",
    "OneVsRestModel",
    "SingleModel",
    "StrategyKind",
    "StrategyModel",
    "bit_counts",
    "bit_targets",
    "classes_from_bits",
    "feature_importance",
    "predict_class",
    "predict_duo_probabilities",
    "predict_pair_probabilities",
    "train_strategy"
]
