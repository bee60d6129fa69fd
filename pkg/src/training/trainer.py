"""Final model training on every labeled period."""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from ..evaluation import LabeledDataset
from ..forest import ForestConfig
from ..preprocess import FittedTransform
from ..strategies import StrategyKind, StrategyModel, train_strategy
from ..utils.seeds import derive_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FinalModel:
    """A trained strategy together with the transform its inputs need."""

    model: StrategyModel
    transform: FittedTransform
    config_hash: str = ""
    seed: int = 0

    @property
    def kind(self) -> StrategyKind:
        return self.model.kind

    @property
    def feature_names(self) -> List[str]:
        return self.transform.feature_names

    def encode(self, frame: pd.DataFrame) -> np.ndarray:
        return self.transform.apply(frame)

    def predict(self, frame: pd.DataFrame) -> Tuple[np.ndarray, np.ndarray]:
        """Class per row and the (rows, 2) p(P), p(S) matrix."""

        X = self.encode(frame)
        return self.model.predict_class(X), self.model.predict_pair_probabilities(X)


class ModelTrainer:
    """Trains the final model the explanations and selections use."""

    def __init__(self, config: Dict[str, Any], config_hash: str = ""):
        self.config = config
        self.config_hash = config_hash
        self.seed = int(config.get("seed", 0))
        self.kind = StrategyKind(config["strategy"])
        self.forest_config = ForestConfig.from_config(
            config["forest"],
            seed=derive_seed(self.seed, "model", "final")
        )

    def train(self, dataset: LabeledDataset, n_jobs: int = 1) -> FinalModel:
        logger.info(
            f"Training final {self.kind.value} model on {dataset.n_instances} periods "
            f"({self.forest_config.n_trees} trees per forest)"
        )

        all_rows = np.arange(dataset.n_instances)
        transform, X, _ = dataset.encode(all_rows)
        model = train_strategy(
            self.kind,
            X,
            dataset.classes,
            self.forest_config,
            dataset.distribution,
            n_jobs=n_jobs
        )

        logger.info(f"Final model uses {transform.width} encoded features from {len(transform.kept_attributes)} attributes")

        return FinalModel(model=model, transform=transform, config_hash=self.config_hash, seed=self.seed)
