"""Synthetic cohort generation."""

from .generator import OUTCOME_COLUMNS, SynthConfig, SyntheticCohort, class_quotas, generate_cohort, write_synthetic

__all__ = [
    "OUTCOME_COLUMNS",
    "SynthConfig",
    "SyntheticCohort",
    "class_quotas",
    "generate_cohort",
    "write_synthetic"
]
