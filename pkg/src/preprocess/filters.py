"""Missingness filters and fill rules applied before cross-validation."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Tuple

import pandas as pd

from ..cohort.table import AttributeMeta, CohortTable
from ..utils.errors import ConfigError, EmptyFeatureSpaceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PreprocessPlan:
    """Dataset preparation parameters."""

    attr_missing_threshold: float = 0.5
    row_missing_threshold: float = 0.4
    scaling: bool = False
    categorical_imputation: str = "mode"
    continuous_imputation: str = "mean"

    def __post_init__(self):
        for name in ("attr_missing_threshold", "row_missing_threshold"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if self.categorical_imputation != "mode" or self.continuous_imputation != "mean":
            raise ConfigError("Only mode (categorical) and mean (continuous) imputation are supported")

    @classmethod
    def from_config(cls, section: Mapping[str, Any]) -> "PreprocessPlan":
        return cls(
            attr_missing_threshold=float(section.get("attr_missing_threshold", 0.5)),
            row_missing_threshold=float(section.get("row_missing_threshold", 0.4)),
            scaling=bool(section.get("scaling", False))
        )


@dataclass
class FilterReport:
    """What `filter_table` removed, in the order it removed it."""

    excluded_attributes: List[str] = field(default_factory=list)
    missing_attributes: List[str] = field(default_factory=list)
    constant_attributes: List[str] = field(default_factory=list)
    dropped_rows: List[Any] = field(default_factory=list)
    kept_attributes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kept_attributes": len(self.kept_attributes),
            "dropped_excluded": list(self.excluded_attributes),
            "dropped_missing": list(self.missing_attributes),
            "dropped_constant": list(self.constant_attributes),
            "dropped_rows": len(self.dropped_rows)
        }


def filter_table(
    frame: pd.DataFrame,
    attributes: Mapping[str, AttributeMeta],
    plan: PreprocessPlan
) -> Tuple[pd.DataFrame, FilterReport]:
    """Drop excluded, sparse and constant attributes, then sparse rows.

    Order: excluded attributes, attributes missing in more than
    `attr_missing_threshold` of rows, rows missing more than
    `row_missing_threshold` of the kept attributes, attributes left with a
    single observed value.
    """

    report = FilterReport()
    columns = list(frame.columns)

    report.excluded_attributes = [c for c in columns if attributes[c].excluded]
    columns = [c for c in columns if not attributes[c].excluded]

    if len(frame):
        missing = frame[columns].isna().mean()
        report.missing_attributes = [c for c in columns if missing[c] > plan.attr_missing_threshold]
        columns = [c for c in columns if missing[c] <= plan.attr_missing_threshold]

    filtered = frame[columns]
    if columns:
        row_missing = filtered.isna().mean(axis=1)
        keep_rows = row_missing <= plan.row_missing_threshold
        report.dropped_rows = list(filtered.index[~keep_rows])
        filtered = filtered[keep_rows]

    report.constant_attributes = [c for c in columns if filtered[c].dropna().nunique() <= 1]
    columns = [c for c in columns if c not in report.constant_attributes]
    filtered = filtered[columns]

    if not columns:
        raise EmptyFeatureSpaceError(
            f"Filtering removed every attribute ({len(report.excluded_attributes)} excluded, "
            f"{len(report.missing_attributes)} sparse, {len(report.constant_attributes)} constant)"
        )

    report.kept_attributes = list(columns)

    for name in report.missing_attributes:
        logger.warning(f"Dropped attribute '{name}': too many missing values")
    logger.info(
        f"Filtered to {len(columns)} attributes and {len(filtered)} rows "
        f"({len(report.dropped_rows)} rows dropped)"
    )

    return filtered, report


def fill_forward(table: CohortTable) -> CohortTable:
    """Carry flagged attributes forward in time, then apply reporting defaults.

    A value observed at timepoint t fills later gaps of the same patient;
    earlier gaps stay missing unless the attribute declares a default.
    """

    frame = table.frame.copy()
    patients = frame.index.get_level_values(0)

    for name, meta in table.attributes.items():
        if name not in frame.columns:
            continue
        if meta.fill_forward:
            frame[name] = frame[name].groupby(patients, sort=False).ffill()
        if meta.default_value is not None:
            default = meta.default_value
            if pd.api.types.is_numeric_dtype(frame[name]):
                default = float(default)
            frame[name] = frame[name].where(frame[name].notna(), default)

    return table.with_frame(frame)
