"""Train-fold imputation, encoding and scaling."""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
import yaml

from ..cohort.table import AttributeKind, AttributeMeta
from .filters import PreprocessPlan

logger = logging.getLogger(__name__)

# Nominal attributes with more distinct values than this are one-hot encoded
BINARY_MAX_VALUES = 2


def _canonical_key(value: Any) -> Tuple[int, Any]:
    if isinstance(value, (int, float, np.integer, np.floating)):
        return 0, float(value)
    return 1, str(value)


def _plain(value: Any) -> Any:
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


def _mode(values: pd.Series) -> Any:
    counts = values.value_counts(dropna=True)
    top = counts.max()
    tied = [v for v, c in counts.items() if c == top]
    return _plain(min(tied, key=_canonical_key))


@dataclass(frozen=True)
class FittedTransform:
    """Preprocessing fitted on one training fold.

    Every output column is numeric and complete. Unseen categories encode
    as an all-zero one-hot block; an unseen value of a binary attribute is
    treated as missing and takes the imputed value.
    """

    kept_attributes: List[str]
    kinds: Dict[str, AttributeKind]
    imputation: Dict[str, Any]
    one_hot: Dict[str, List[Any]] = field(default_factory=dict)
    binary: Dict[str, List[Any]] = field(default_factory=dict)
    scaling: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    dropped: List[str] = field(default_factory=list)

    @property
    def feature_names(self) -> List[str]:
        names: List[str] = []
        for name in self.kept_attributes:
            if name in self.one_hot:
                names.extend(f"{name}={value}" for value in self.one_hot[name])
            else:
                names.append(name)
        return names

    @property
    def width(self) -> int:
        return len(self.feature_names)

    def _encode_column(self, name: str, column: pd.Series) -> np.ndarray:
        filled = column.where(column.notna(), self.imputation[name])

        if name in self.one_hot:
            categories = self.one_hot[name]
            block = np.zeros((len(filled), len(categories)), dtype=float)
            for j, category in enumerate(categories):
                block[:, j] = (filled == category).to_numpy(dtype=bool)
            return block

        if name in self.binary:
            categories = self.binary[name]
            filled = filled.where(filled.isin(categories), self.imputation[name])
            positive = categories[-1] if len(categories) == BINARY_MAX_VALUES else None
            indicator = (filled == positive).to_numpy(dtype=bool) if positive is not None else np.zeros(len(filled), dtype=bool)
            return indicator.astype(float)[:, None]

        values = pd.to_numeric(filled, errors="coerce").to_numpy(dtype=float)
        if name in self.scaling:
            low, high = self.scaling[name]
            if high > low:
                values = np.clip((values - low) / (high - low), 0.0, 1.0)
            else:
                values = np.zeros_like(values)
        return values[:, None]

    def apply(self, frame: pd.DataFrame) -> np.ndarray:
        """Encode every row of `frame` into the fitted feature space."""

        if not self.kept_attributes:
            return np.zeros((len(frame), 0), dtype=float)
        blocks = [self._encode_column(name, frame[name]) for name in self.kept_attributes]
        return np.hstack(blocks)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kept_attributes": list(self.kept_attributes),
            "kinds": {name: kind.value for name, kind in self.kinds.items()},
            "imputation": {name: _plain(value) for name, value in self.imputation.items()},
            "one_hot": {name: [_plain(v) for v in values] for name, values in self.one_hot.items()},
            "binary": {name: [_plain(v) for v in values] for name, values in self.binary.items()},
            "scaling": {name: [float(low), float(high)] for name, (low, high) in self.scaling.items()},
            "dropped": list(self.dropped),
            "feature_names": self.feature_names
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FittedTransform":
        return cls(
            kept_attributes=list(data["kept_attributes"]),
            kinds={name: AttributeKind(kind) for name, kind in data["kinds"].items()},
            imputation=dict(data["imputation"]),
            one_hot={name: list(values) for name, values in data.get("one_hot", {}).items()},
            binary={name: list(values) for name, values in data.get("binary", {}).items()},
            scaling={name: (float(v[0]), float(v[1])) for name, v in data.get("scaling", {}).items()},
            dropped=list(data.get("dropped", []))
        )

    def save(self, path: Path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as f:
            yaml.safe_dump(self.to_dict(), f, default_flow_style=False, sort_keys=False)
        logger.info(f"Saved fitted transform to {path}")


def fit_transform(
    train_rows: pd.DataFrame,
    attributes: Mapping[str, AttributeMeta],
    plan: Optional[PreprocessPlan] = None
) -> FittedTransform:
    """Fit imputation, encoding and optional scaling on training rows only."""

    if len(train_rows) == 0:
        raise ValueError("Cannot fit a transform on an empty training fold")

    plan = plan or PreprocessPlan()
    kept: List[str] = []
    kinds: Dict[str, AttributeKind] = {}
    imputation: Dict[str, Any] = {}
    one_hot: Dict[str, List[Any]] = {}
    binary: Dict[str, List[Any]] = {}
    scaling: Dict[str, Tuple[float, float]] = {}
    dropped: List[str] = []

    for name in train_rows.columns:
        meta = attributes[name]
        column = train_rows[name]
        observed = column.dropna()

        if observed.empty:
            if meta.default_value is None:
                dropped.append(name)
                logger.warning(f"Attribute '{name}' is missing in the whole training fold, dropped")
                continue
            impute = _plain(meta.default_value)
            if pd.api.types.is_numeric_dtype(column):
                impute = float(impute)
            observed = pd.Series([impute])
        elif meta.kind is AttributeKind.CONTINUOUS:
            impute = float(observed.astype(float).mean())
        else:
            impute = _mode(observed)

        kept.append(name)
        kinds[name] = meta.kind
        imputation[name] = impute

        if meta.kind is AttributeKind.CATEGORICAL:
            categories = sorted({_plain(v) for v in observed}, key=_canonical_key)
            if len(categories) > BINARY_MAX_VALUES:
                one_hot[name] = categories
            else:
                binary[name] = categories
        elif plan.scaling:
            filled = pd.to_numeric(column.where(column.notna(), impute), errors="coerce")
            scaling[name] = (float(filled.min()), float(filled.max()))

    logger.debug(f"Fitted transform on {len(train_rows)} rows: {len(kept)} attributes, {len(dropped)} dropped")

    return FittedTransform(
        kept_attributes=kept,
        kinds=kinds,
        imputation=imputation,
        one_hot=one_hot,
        binary=binary,
        scaling=scaling,
        dropped=dropped
    )


def apply_transform(transform: FittedTransform, row: pd.Series) -> np.ndarray:
    """Encode a single row into a fixed-width numeric vector."""

    return transform.apply(row.to_frame().T)[0]
