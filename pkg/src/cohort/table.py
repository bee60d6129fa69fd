"""Cohort table loading with per-attribute metadata."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
import yaml

from ..utils.errors import CohortLoadError

logger = logging.getLogger(__name__)

# Attributes with at most this many distinct values default to categorical
CATEGORICAL_MAX_DISTINCT = 10

OUTCOME_ROLES = ("pain_left", "pain_right", "jsw_left", "jsw_right")

# Valid outcome values per measure (WOMAC pain 0-100, JSW in mm)
OUTCOME_RANGES = {"pain": (0.0, 100.0), "jsw": (0.0, np.inf)}


class AttributeKind(str, Enum):
    CATEGORICAL = "categorical"
    ORDINAL = "ordinal"
    CONTINUOUS = "continuous"

    @property
    def numeric(self) -> bool:
        return self is not AttributeKind.CATEGORICAL


@dataclass(frozen=True)
class AttributeMeta:
    """Metadata for one cohort attribute."""

    name: str
    kind: AttributeKind
    fill_forward: bool = False
    default_value: Optional[Any] = None
    excluded: bool = False

    def __post_init__(self):
        if self.default_value is not None and self.kind is AttributeKind.CONTINUOUS:
            raise CohortLoadError(
                f"Attribute '{self.name}': default values are only allowed for "
                f"categorical or ordinal attributes",
                column=self.name
            )

    def to_dict(self) -> Dict[str, Any]:
        section: Dict[str, Any] = {"kind": self.kind.value}
        if self.fill_forward:
            section["fill_forward"] = True
        if self.default_value is not None:
            section["default"] = self.default_value
        if self.excluded:
            section["excluded"] = True
        return section


@dataclass(frozen=True)
class CohortTable:
    """Patient × timepoint × attribute store.

    `frame` is indexed by (patient, timepoint) with one column per attribute.
    Missing cells are NaN (numeric) or None (text); nothing else marks a gap.
    """

    frame: pd.DataFrame
    attributes: Dict[str, AttributeMeta]
    outcomes: Dict[str, str] = field(default_factory=dict)
    patient_column: str = "patient"
    timepoint_column: str = "timepoint"

    def __post_init__(self):
        index = self.frame.index
        if index.duplicated().any():
            duplicate = index[index.duplicated()][0]
            raise CohortLoadError(f"Duplicate (patient, timepoint) row {duplicate}", column=self.timepoint_column)

        # Rows of a patient are consecutive, in visit order
        steps = pd.Series(index.get_level_values(1), index=index.get_level_values(0)).groupby(level=0, sort=False).diff()
        if (steps <= 0).any():
            patient = index[int(np.flatnonzero((steps <= 0).to_numpy())[0])][0]
            raise CohortLoadError(
                f"Timepoints of patient '{patient}' must be strictly increasing",
                column=self.timepoint_column
            )

        violation = _outcome_violation(self.outcomes, self.frame)
        if violation is not None:
            column, position, message = violation
            raise CohortLoadError(f"{message} at {self.frame.index[position]}", column=column)

    @property
    def patients(self) -> List[str]:
        return list(dict.fromkeys(self.frame.index.get_level_values(0)))

    @property
    def timepoints(self) -> List[int]:
        return sorted(set(int(t) for t in self.frame.index.get_level_values(1)))

    @property
    def feature_attributes(self) -> List[str]:
        return [name for name, meta in self.attributes.items() if not meta.excluded]

    def value(self, patient: str, timepoint: int, attribute: str) -> Any:
        cell = self.frame.at[(patient, timepoint), attribute]
        return None if _is_missing(cell) else cell

    def with_frame(self, frame: pd.DataFrame) -> "CohortTable":
        return CohortTable(
            frame=frame,
            attributes=self.attributes,
            outcomes=self.outcomes,
            patient_column=self.patient_column,
            timepoint_column=self.timepoint_column
        )


def _is_missing(value: Any) -> bool:
    return value is None or (isinstance(value, float) and np.isnan(value))


def _outcome_violation(outcomes: Mapping[str, str], columns: Mapping[str, Any]) -> Optional[Tuple[str, int, str]]:
    """First outcome value outside its measure's range as (column, position, message)."""

    for role, column in outcomes.items():
        low, high = OUTCOME_RANGES[role.split("_")[0]]
        values = pd.to_numeric(pd.Series(columns[column]), errors="coerce").to_numpy(dtype=float)
        bad = (values < low) | (values > high)
        if bad.any():
            position = int(np.flatnonzero(bad)[0])
            return column, position, f"Outcome '{column}' value {values[position]} is outside [{low}, {high}]"
    return None


def infer_kind(values: pd.Series) -> AttributeKind:
    """Kind for an attribute whose metadata does not declare one."""

    observed = values.dropna()
    if observed.nunique() <= CATEGORICAL_MAX_DISTINCT:
        return AttributeKind.CATEGORICAL

    numeric = pd.to_numeric(observed, errors="coerce")
    if numeric.notna().all():
        return AttributeKind.CONTINUOUS

    return AttributeKind.CATEGORICAL


def _parse_meta(name: str, section: Optional[Dict[str, Any]], column: pd.Series) -> AttributeMeta:
    section = section or {}

    kind_value = section.get("kind")
    if kind_value is None:
        kind = infer_kind(column)
        logger.debug(f"Attribute '{name}' has no declared kind, inferred {kind.value}")
    else:
        try:
            kind = AttributeKind(kind_value)
        except ValueError as e:
            raise CohortLoadError(f"Unknown kind '{kind_value}' for column '{name}'", column=name) from e

    return AttributeMeta(
        name=name,
        kind=kind,
        fill_forward=bool(section.get("fill_forward", False)),
        default_value=section.get("default"),
        excluded=bool(section.get("excluded", False))
    )


def _convert_column(name: str, column: pd.Series, meta: AttributeMeta) -> pd.Series:
    numeric = pd.to_numeric(column, errors="coerce")

    if meta.kind.numeric:
        bad = column.notna() & numeric.isna()
        if bad.any():
            position = int(np.flatnonzero(bad.to_numpy())[0])
            raise CohortLoadError(
                f"Non-numeric value {column.iloc[position]!r} in {meta.kind.value} column "
                f"'{name}' at row {position + 2}",
                column=name,
                row=position + 2
            )
        return numeric.astype(float)

    # Categorical codes stay numeric when every observed value parses
    if numeric[column.notna()].notna().all():
        return numeric.astype(float)

    return column.astype(object).where(column.notna(), None)


def load_cohort(data_file: Path, metadata_file: Path) -> CohortTable:
    """Load a cohort CSV and its YAML attribute metadata."""

    with open(metadata_file) as f:
        metadata = yaml.safe_load(f) or {}

    patient_column = metadata.get("patient_column", "patient")
    timepoint_column = metadata.get("timepoint_column", "timepoint")
    sections: Dict[str, Any] = metadata.get("attributes") or {}
    outcomes: Dict[str, str] = metadata.get("outcomes") or {}

    raw = pd.read_csv(data_file, dtype=str, keep_default_na=False, na_values=[""], encoding="utf-8")

    for required in (patient_column, timepoint_column):
        if required not in raw.columns:
            raise CohortLoadError(f"Missing identifier column '{required}'", column=required)

    attribute_columns = [c for c in raw.columns if c not in (patient_column, timepoint_column)]
    for column in attribute_columns:
        if column not in sections:
            raise CohortLoadError(f"Column '{column}' is not described in the metadata", column=column)

    for role, column in outcomes.items():
        if role not in OUTCOME_ROLES:
            raise CohortLoadError(f"Unknown outcome role '{role}'", column=column)
        if column not in attribute_columns:
            raise CohortLoadError(f"Outcome column '{column}' for '{role}' not in data", column=column)

    timepoints = pd.to_numeric(raw[timepoint_column], errors="coerce")
    if timepoints.isna().any() or (timepoints % 1 != 0).any():
        position = int(np.flatnonzero((timepoints.isna() | (timepoints % 1 != 0)).to_numpy())[0])
        raise CohortLoadError(
            f"Timepoints must be integer years (row {position + 2})",
            column=timepoint_column,
            row=position + 2
        )

    patients = raw[patient_column].astype(str)
    previous = timepoints.groupby(patients, sort=False).shift()
    out_of_order = (previous.notna() & (timepoints <= previous)).to_numpy()
    if out_of_order.any():
        position = int(np.flatnonzero(out_of_order)[0])
        patient, current, before = patients.iloc[position], int(timepoints.iloc[position]), int(previous.iloc[position])
        problem = f"Duplicate visit at timepoint {current}" if current == before else f"Timepoint {current} follows {before}"
        raise CohortLoadError(
            f"{problem} for patient '{patient}'; timepoints must be strictly increasing (row {position + 2})",
            column=timepoint_column,
            row=position + 2
        )

    attributes: Dict[str, AttributeMeta] = {}
    columns: Dict[str, pd.Series] = {}
    for name in attribute_columns:
        meta = _parse_meta(name, sections[name], raw[name])
        attributes[name] = meta
        columns[name] = _convert_column(name, raw[name], meta)

    violation = _outcome_violation(outcomes, columns)
    if violation is not None:
        column, position, message = violation
        raise CohortLoadError(f"{message} (row {position + 2})", column=column, row=position + 2)

    index = pd.MultiIndex.from_arrays(
        [patients, timepoints.astype(int)],
        names=[patient_column, timepoint_column]
    )
    frame = pd.DataFrame(columns, index=index)
    frame = frame.sort_index(level=[0, 1], sort_remaining=False, kind="mergesort")

    excluded = [n for n, m in attributes.items() if m.excluded]
    logger.info(
        f"Loaded cohort from {data_file}: {frame.index.get_level_values(0).nunique()} patients, "
        f"{len(frame)} visits, {len(attributes)} attributes ({len(excluded)} excluded)"
    )

    return CohortTable(
        frame=frame,
        attributes=attributes,
        outcomes=dict(outcomes),
        patient_column=patient_column,
        timepoint_column=timepoint_column
    )


def write_cohort(table: CohortTable, data_file: Path, metadata_file: Path):
    """Write a cohort in the format `load_cohort` reads."""

    data_file.parent.mkdir(parents=True, exist_ok=True)
    frame = table.frame.reset_index()
    frame.to_csv(data_file, index=False, na_rep="", encoding="utf-8", float_format=None)

    metadata = {
        "patient_column": table.patient_column,
        "timepoint_column": table.timepoint_column,
        "outcomes": dict(table.outcomes),
        "attributes": {name: meta.to_dict() for name, meta in table.attributes.items()}
    }
    with open(metadata_file, "w") as f:
        yaml.safe_dump(metadata, f, default_flow_style=False, sort_keys=False)

    logger.info(f"Wrote cohort to {data_file} and metadata to {metadata_file}")


def load_replacements(path: Optional[Path]) -> Dict[str, int]:
    """Read `patient,timepoint` knee-replacement events (first event per patient)."""

    if path is None:
        return {}

    frame = pd.read_csv(path, dtype={"patient": str})
    if not {"patient", "timepoint"} <= set(frame.columns):
        raise CohortLoadError(f"Replacement file {path} needs 'patient' and 'timepoint' columns")

    events = frame.groupby("patient")["timepoint"].min()
    return {str(p): int(t) for p, t in events.items()}
