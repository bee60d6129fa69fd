"""Longitudinal cohort loading and period expansion."""

from .periods import OutcomeRaw, PeriodRecord, build_periods, period_counts, periods_to_frame
from .table import (
    AttributeKind,
    AttributeMeta,
    CohortTable,
    infer_kind,
    load_cohort,
    load_replacements,
    write_cohort
)

__all__ = [
    "AttributeKind",
    "AttributeMeta",
    "CohortTable",
    "infer_kind",
    "load_cohort",
    "write_cohort",
    "load_replacements",
    "OutcomeRaw",
    "PeriodRecord",
    "build_periods",
    "periods_to_frame",
    "period_counts"
]
