"""Progression labels for observation periods."""

from .criteria import (
    JswObservation,
    LabelPair,
    PainObservation,
    ProgressionClass,
    narrowing_rate,
    pain_progression,
    structural_progression
)
from .labeler import ClassDistribution, Exclusion, PAIN_MODES, class_distribution, label_period, label_periods

__all__ = [
    "JswObservation",
    "LabelPair",
    "PainObservation",
    "ProgressionClass",
    "narrowing_rate",
    "pain_progression",
    "structural_progression",
    "ClassDistribution",
    "Exclusion",
    "PAIN_MODES",
    "class_distribution",
    "label_period",
    "label_periods"
]
