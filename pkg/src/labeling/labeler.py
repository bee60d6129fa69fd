"""Assignment of periods to progression classes."""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

import pandas as pd

from ..cohort.periods import Knees, PeriodRecord
from .criteria import (
    JswObservation,
    LabelPair,
    PainObservation,
    ProgressionClass,
    narrowing_rate,
    pain_progression,
    structural_progression
)

logger = logging.getLogger(__name__)

PAIN_MODES = ("timepoint", "knee")


@dataclass(frozen=True)
class Exclusion:
    period_id: str
    reason: str


@dataclass(frozen=True)
class ClassDistribution:
    counts: Dict[ProgressionClass, int]
    fractions: Dict[ProgressionClass, float]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "class": [c.display for c in ProgressionClass],
            "count": [self.counts[c] for c in ProgressionClass],
            "fraction": [self.fractions[c] for c in ProgressionClass]
        })


def _max_reported(knees: Knees) -> Optional[float]:
    reported = [v for v in knees if v is not None]
    return max(reported) if reported else None


def _pain_bit(period: PeriodRecord, pain_mode: str) -> Optional[bool]:
    outcome = period.outcome_raw

    if pain_mode == "timepoint":
        obs = PainObservation(
            p_s=_max_reported(outcome.pain_start),
            p_e=_max_reported(outcome.pain_end),
            duration_years=period.duration_years
        )
        return pain_progression(obs)

    verdicts = []
    for start, end in zip(outcome.pain_start, outcome.pain_end):
        if start is None or end is None:
            continue
        verdicts.append(pain_progression(PainObservation(start, end, period.duration_years)))
    if not verdicts:
        return None
    return any(verdicts)


def _structure_bit(period: PeriodRecord) -> Optional[bool]:
    outcome = period.outcome_raw
    best: Optional[JswObservation] = None
    best_rate = None

    # Left knee is examined first and wins ties
    for start, end in zip(outcome.jsw_start, outcome.jsw_end):
        obs = JswObservation(start, end, period.duration_years)
        rate = narrowing_rate(obs)
        if rate is None:
            continue
        if best_rate is None or rate > best_rate:
            best, best_rate = obs, rate

    if best is None:
        return None
    return structural_progression(best)


def label_period(period: PeriodRecord, pain_mode: str = "timepoint") -> Tuple[Optional[ProgressionClass], Optional[str]]:
    """Classify one period.

    Returns (class, None) or (None, reason) when the period must be excluded.
    """

    if pain_mode not in PAIN_MODES:
        raise ValueError(f"pain_mode must be one of {PAIN_MODES}, got {pain_mode!r}")

    if period.after_replacement:
        return None, "after knee replacement"

    p_bit = _pain_bit(period, pain_mode)
    s_bit = _structure_bit(period)

    if p_bit is None and s_bit is None:
        return None, "missing pain and JSW"
    if p_bit is None:
        return None, "missing pain"
    if s_bit is None:
        return None, "missing JSW"

    return ProgressionClass.from_pair(LabelPair(p=p_bit, s=s_bit)), None


def label_periods(
    periods: Iterable[PeriodRecord],
    pain_mode: str = "timepoint"
) -> Tuple[Dict[str, ProgressionClass], List[Exclusion]]:
    """Label every period and collect the exclusion ledger."""

    labels: Dict[str, ProgressionClass] = {}
    exclusions: List[Exclusion] = []

    for period in periods:
        cls, reason = label_period(period, pain_mode)
        if cls is None:
            exclusions.append(Exclusion(period.period_id, reason))
        else:
            labels[period.period_id] = cls

    logger.info(f"Labeled {len(labels)} periods, excluded {len(exclusions)}")

    return labels, exclusions


def class_distribution(labels: Iterable[ProgressionClass]) -> ClassDistribution:
    """Per-class counts and fractions."""

    counts = {c: 0 for c in ProgressionClass}
    for label in labels:
        counts[ProgressionClass(label)] += 1

    total = sum(counts.values())
    fractions = {c: (counts[c] / total if total else 0.0) for c in ProgressionClass}

    return ClassDistribution(counts=counts, fractions=fractions)
