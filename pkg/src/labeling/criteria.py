"""Pain and structure progression criteria."""

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple, Optional

# Threshold comparisons are inclusive; the tolerance absorbs float
# representation error such as (4.0 - 3.1) / 3 falling just below 0.3.
_TOLERANCE = 1e-9

PAIN_RATE_MODERATE = 5.0
PAIN_RATE_RAPID = 10.0
PAIN_END_MODERATE = 40.0
PAIN_END_RAPID = 35.0
PAIN_SUSTAINED = 40.0
JSW_NARROWING_RATE = 0.3


class LabelPair(NamedTuple):
    p: bool
    s: bool


class ProgressionClass(IntEnum):
    N = 0
    P = 1
    S = 2
    PS = 3

    @property
    def label_pair(self) -> LabelPair:
        return LabelPair(p=bool(self.value & 1), s=bool(self.value & 2))

    @classmethod
    def from_pair(cls, pair: LabelPair) -> "ProgressionClass":
        return cls(int(bool(pair[0])) | (int(bool(pair[1])) << 1))

    @property
    def display(self) -> str:
        return "P+S" if self is ProgressionClass.PS else self.name

    @property
    def progressive(self) -> bool:
        return self is not ProgressionClass.N


@dataclass(frozen=True)
class PainObservation:
    p_s: Optional[float]
    p_e: Optional[float]
    duration_years: float

    def __post_init__(self):
        for value in (self.p_s, self.p_e):
            if value is not None and not 0.0 <= value <= 100.0:
                raise ValueError(f"WOMAC pain must lie in [0, 100], got {value}")


@dataclass(frozen=True)
class JswObservation:
    jsw_s: Optional[float]
    jsw_e: Optional[float]
    duration_years: float

    def __post_init__(self):
        for value in (self.jsw_s, self.jsw_e):
            if value is not None and value < 0.0:
                raise ValueError(f"JSW must be non-negative, got {value}")


def _at_least(value: float, bound: float) -> bool:
    return value >= bound - _TOLERANCE


def pain_progression(obs: PainObservation) -> Optional[bool]:
    """Progressive or intense sustained pain.

    Returns None when a pain value is missing (the period cannot be labeled).
    The increase is annualized; the 35/40 end and sustained levels are not.
    """

    if obs.p_s is None or obs.p_e is None:
        return None

    delta = (obs.p_e - obs.p_s) / obs.duration_years
    moderate = _at_least(delta, PAIN_RATE_MODERATE) and _at_least(obs.p_e, PAIN_END_MODERATE)
    rapid = _at_least(delta, PAIN_RATE_RAPID) and _at_least(obs.p_e, PAIN_END_RAPID)
    sustained = _at_least(obs.p_s, PAIN_SUSTAINED) and _at_least(obs.p_e, PAIN_SUSTAINED)

    return moderate or rapid or sustained


def narrowing_rate(obs: JswObservation) -> Optional[float]:
    """Annual decrease of minimum JSW in mm, None when unmeasurable."""

    if obs.jsw_s is None or obs.jsw_e is None:
        return None
    return (obs.jsw_s - obs.jsw_e) / obs.duration_years


def structural_progression(obs: JswObservation) -> Optional[bool]:
    """Minimum JSW decreases by at least 0.3 mm per year."""

    rate = narrowing_rate(obs)
    if rate is None:
        return None
    return _at_least(rate, JSW_NARROWING_RATE)
