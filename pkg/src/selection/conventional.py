"""Conventional clinical inclusion criteria."""

import logging
from dataclasses import dataclass
from typing import Any, Mapping, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..utils.errors import ConfigError

logger = logging.getLogger(__name__)

ACR_MIN_AGE = 50
ACR_MAX_STIFFNESS_MINUTES = 30
KL_MIN, KL_MAX = 1, 3
WOMAC_MIN_PAIN = 40

PER_KNEE = ("knee_pain", "crepitus", "osteophytes", "kl_grade", "womac_pain")
PER_PATIENT = ("age", "morning_stiffness_minutes")


@dataclass(frozen=True)
class ConventionalInputs:
    """Criteria fields per instance; per-knee arrays are (instances, 2) as (left, right).

    Missing values are NaN.
    """

    ids: Tuple[str, ...]
    age: np.ndarray
    morning_stiffness_minutes: np.ndarray
    knee_pain: np.ndarray
    crepitus: np.ndarray
    osteophytes: np.ndarray
    kl_grade: np.ndarray
    womac_pain: np.ndarray

    def __post_init__(self):
        n = len(self.ids)
        for name in PER_PATIENT:
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have one value per instance")
        for name in PER_KNEE:
            if getattr(self, name).shape != (n, 2):
                raise ValueError(f"{name} must have a (left, right) pair per instance")

        kl = self.kl_grade[~np.isnan(self.kl_grade)]
        if np.any((kl < 0) | (kl > 4) | (kl % 1 != 0)):
            raise ValueError("KL grades must be integers in 0..4")

    def __len__(self) -> int:
        return len(self.ids)


Column = Union[str, Sequence[str]]


def _knee_columns(frame: pd.DataFrame, column: Column) -> np.ndarray:
    if isinstance(column, str):
        column = [column, column]
    if len(column) != 2:
        raise ConfigError(f"Per-knee mapping needs (left, right) columns, got {column}")
    return np.column_stack([pd.to_numeric(frame[c], errors="coerce").to_numpy(dtype=float) for c in column])


def conventional_inputs(frame: pd.DataFrame, mapping: Mapping[str, Any]) -> ConventionalInputs:
    """Read the criteria fields from a start-of-period feature frame.

    `mapping` names one column per patient-level field and a
    (left, right) column pair per knee-level field.
    """

    missing = [c for c in (*PER_PATIENT, *PER_KNEE) if c not in mapping]
    if missing:
        raise ConfigError(f"selection.columns is missing {missing}")

    columns = [mapping[f] for f in PER_PATIENT]
    for field in PER_KNEE:
        value = mapping[field]
        columns.extend([value] if isinstance(value, str) else value)
    absent = sorted(set(c for c in columns if c not in frame.columns))
    if absent:
        raise ConfigError(f"Conventional criteria columns not in the period frame: {absent}")

    fields = {
        field: pd.to_numeric(frame[mapping[field]], errors="coerce").to_numpy(dtype=float)
        for field in PER_PATIENT
    }
    fields.update({field: _knee_columns(frame, mapping[field]) for field in PER_KNEE})

    return ConventionalInputs(ids=tuple(str(i) for i in frame.index), **fields)


def _nullable(values: np.ndarray) -> pd.Series:
    return pd.Series(values, dtype="Float64")


def _instance_outcome(inputs: ConventionalInputs) -> pd.Series:
    """Three-valued outcome per instance: True, False, or NA when undecidable."""

    age = _nullable(inputs.age)
    stiffness = _nullable(inputs.morning_stiffness_minutes)

    outcome = None
    for knee in (0, 1):
        pain = _nullable(inputs.knee_pain[:, knee]) != 0
        kl = _nullable(inputs.kl_grade[:, knee])
        womac = _nullable(inputs.womac_pain[:, knee])

        acr = pain & (
            (age > ACR_MIN_AGE)
            | (stiffness < ACR_MAX_STIFFNESS_MINUTES)
            | (_nullable(inputs.crepitus[:, knee]) != 0)
            | (_nullable(inputs.osteophytes[:, knee]) != 0)
        )
        passes = acr & (kl >= KL_MIN) & (kl <= KL_MAX) & (womac >= WOMAC_MIN_PAIN)
        outcome = passes if outcome is None else outcome | passes

    return outcome


def conventional_select(inputs: ConventionalInputs) -> np.ndarray:
    """Instances where any knee meets ACR criteria, KL 1-3 and WOMAC pain >= 40.

    Instances whose outcome depends on missing fields are not selected.
    """

    outcome = _instance_outcome(inputs)
    selected = outcome.fillna(False).to_numpy(dtype=bool)
    logger.debug(f"Conventional criteria selected {selected.sum()} of {len(inputs)} instances")
    return selected


def unevaluable(inputs: ConventionalInputs) -> np.ndarray:
    """Instances the criteria cannot decide because of missing fields."""

    return _instance_outcome(inputs).isna().to_numpy(dtype=bool)
