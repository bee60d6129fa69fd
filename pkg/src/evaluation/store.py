"""Pooled out-of-sample predictions."""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from ..utils.artifacts import read_table, write_table
from ..utils.errors import PipelineError
from .metrics import weighted_f1

logger = logging.getLogger(__name__)

COLUMNS = ["config", "repeat", "seed", "fold", "instance", "true", "pred", "p_p", "p_s"]
KEY = ["config", "repeat", "seed"]


class PredictionStore:
    """Out-of-sample predictions keyed by (config, repeat, seed, instance).

    Chunks may arrive in any order; `frame` is always sorted by config
    (first-appearance order), repeat, seed and instance.
    """

    def __init__(self, frame: Optional[pd.DataFrame] = None):
        self._chunks: List[pd.DataFrame] = []
        self._configs: List[str] = []
        self._frame: Optional[pd.DataFrame] = None
        if frame is not None:
            self.add(frame)

    def add(self, chunk: pd.DataFrame):
        missing = set(COLUMNS) - set(chunk.columns)
        if missing:
            raise ValueError(f"Prediction chunk is missing columns {sorted(missing)}")

        chunk = chunk[COLUMNS].copy()
        chunk["config"] = chunk["config"].astype(str)
        chunk["instance"] = chunk["instance"].astype(str)
        for config in chunk["config"].unique():
            if config not in self._configs:
                self._configs.append(config)
        self._chunks.append(chunk)
        self._frame = None

    def extend(self, other: "PredictionStore"):
        if len(other):
            self.add(other.frame)

    @property
    def frame(self) -> pd.DataFrame:
        if self._frame is None:
            if not self._chunks:
                self._frame = pd.DataFrame(columns=COLUMNS)
            else:
                frame = pd.concat(self._chunks, ignore_index=True)
                order = {c: i for i, c in enumerate(self._configs)}
                frame["_order"] = frame["config"].map(order)
                frame = frame.sort_values(["_order", "repeat", "seed", "instance"], kind="mergesort")
                self._frame = frame.drop(columns="_order").reset_index(drop=True)
                self._chunks = [self._frame]
        return self._frame

    def __len__(self) -> int:
        return len(self.frame)

    @property
    def configs(self) -> List[str]:
        return list(self._configs)

    def for_config(self, config: str) -> "PredictionStore":
        frame = self.frame
        subset = frame[frame["config"] == config]
        if subset.empty:
            raise KeyError(f"No predictions for configuration '{config}'")
        return PredictionStore(subset)

    def check_coverage(self, instances: Sequence[str]):
        """Every (config, repeat, seed) group predicts each instance exactly once."""

        expected = sorted(str(i) for i in instances)
        for key, group in self.frame.groupby(KEY, sort=False):
            if sorted(group["instance"]) != expected:
                raise PipelineError(f"Predictions for {dict(zip(KEY, key))} do not cover every instance exactly once")

    def model_scores(self) -> pd.DataFrame:
        """Pooled weighted F1 of every trained model, one row per (config, repeat, seed)."""

        rows = []
        for (config, repeat, seed), group in self.frame.groupby(KEY, sort=False):
            rows.append({
                "config": config,
                "repeat": int(repeat),
                "seed": int(seed),
                "score": weighted_f1(group["true"].to_numpy(), group["pred"].to_numpy())
            })
        return pd.DataFrame(rows, columns=KEY + ["score"])

    def save(self, path: Path, header: str = "") -> Path:
        return write_table(self.frame, path, header)

    @classmethod
    def load(cls, path: Path) -> "PredictionStore":
        frame = read_table(path, dtype={"config": str, "instance": str})
        return cls(frame)

    def instances(self) -> List[str]:
        return sorted(self.frame["instance"].unique())

    def truth(self) -> Dict[str, int]:
        """True class per instance."""

        first = self.frame.drop_duplicates("instance")
        return dict(zip(first["instance"], first["true"].astype(np.int64)))
