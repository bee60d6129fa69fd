"""Exception types raised by the pipeline."""

from typing import Optional


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


class PipelineError(RuntimeError):
    """A pipeline stage could not complete."""


class CohortLoadError(PipelineError):
    """Cohort data or metadata could not be loaded."""

    def __init__(self, message: str, column: Optional[str] = None, row: Optional[int] = None):
        super().__init__(message)
        self.column = column
        self.row = row


class EmptyFeatureSpaceError(PipelineError):
    """Every attribute was removed by filtering."""


class DegenerateLabelError(PipelineError):
    """A label bit or class is constant in the training data."""

    def __init__(self, message: str, label: str):
        super().__init__(message)
        self.label = label


class ModelFormatError(PipelineError):
    """A model artifact is malformed or has an unsupported version."""
