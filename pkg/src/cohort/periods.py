"""Expansion of patients into observation periods."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd

from .table import CohortTable

logger = logging.getLogger(__name__)

MIN_PERIOD_YEARS = 2

Knees = Tuple[Optional[float], Optional[float]]


@dataclass(frozen=True)
class OutcomeRaw:
    """Start/end pain (WOMAC 0-100) and minimum JSW (mm), as (left, right) pairs."""

    pain_start: Knees
    pain_end: Knees
    jsw_start: Knees
    jsw_end: Knees


@dataclass(frozen=True)
class PeriodRecord:
    """One observation window of a patient; the unit of classification."""

    patient: str
    start_tp: int
    end_tp: int
    features: pd.Series
    outcome_raw: OutcomeRaw
    after_replacement: bool = False

    @property
    def duration_years(self) -> int:
        return self.end_tp - self.start_tp

    @property
    def period_id(self) -> str:
        return f"{self.patient}:{self.start_tp}-{self.end_tp}"


def _knees(table: CohortTable, row: pd.Series, left_role: str, right_role: str) -> Knees:
    def read(role: str) -> Optional[float]:
        column = table.outcomes.get(role)
        if column is None:
            return None
        value = row[column]
        if value is None or (isinstance(value, float) and np.isnan(value)):
            return None
        return float(value)

    return read(left_role), read(right_role)


def build_periods(
    table: CohortTable,
    replacement_events: Optional[Mapping[str, int]] = None,
    exclude_replacement_visit: bool = True,
    keep_flagged: bool = False
) -> List[PeriodRecord]:
    """Enumerate every ordered timepoint pair at least two years apart.

    A replacement in either knee ends the usable history of the whole
    patient: periods ending at the replacement visit (or, with
    `exclude_replacement_visit=False`, after it) are flagged
    `after_replacement` and dropped unless `keep_flagged` is set.
    """

    replacement_events = replacement_events or {}
    periods: List[PeriodRecord] = []
    dropped = 0

    for patient, visits in table.frame.groupby(level=0, sort=False):
        visits = visits.droplevel(0)
        timepoints = sorted(int(t) for t in visits.index)
        replacement = replacement_events.get(str(patient))

        for i, start in enumerate(timepoints):
            for end in timepoints[i + 1:]:
                if end - start < MIN_PERIOD_YEARS:
                    continue

                after = False
                if replacement is not None:
                    after = end >= replacement if exclude_replacement_visit else end > replacement

                if after:
                    dropped += 1
                    if not keep_flagged:
                        continue

                start_row = visits.loc[start]
                end_row = visits.loc[end]
                outcome = OutcomeRaw(
                    pain_start=_knees(table, start_row, "pain_left", "pain_right"),
                    pain_end=_knees(table, end_row, "pain_left", "pain_right"),
                    jsw_start=_knees(table, start_row, "jsw_left", "jsw_right"),
                    jsw_end=_knees(table, end_row, "jsw_left", "jsw_right")
                )
                periods.append(PeriodRecord(
                    patient=str(patient),
                    start_tp=start,
                    end_tp=end,
                    features=start_row,
                    outcome_raw=outcome,
                    after_replacement=after
                ))

    logger.info(f"Built {len(periods)} periods ({dropped} at or after a knee replacement)")

    return periods


def periods_to_frame(periods: List[PeriodRecord], attributes: Optional[List[str]] = None) -> pd.DataFrame:
    """Start-of-period feature frame indexed by period id."""

    if not periods:
        return pd.DataFrame(columns=attributes or [])

    frame = pd.DataFrame(
        [p.features for p in periods],
        index=pd.Index([p.period_id for p in periods], name="period")
    ).infer_objects()
    if attributes is not None:
        frame = frame[attributes]

    return frame


def period_counts(periods: List[PeriodRecord]) -> Dict[str, int]:
    """Number of periods per patient."""

    counts: Dict[str, int] = {}
    for period in periods:
        counts[period.patient] = counts.get(period.patient, 0) + 1
    return counts
