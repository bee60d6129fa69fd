"""Dataset preparation: filters, fill rules and fold-local transforms."""

from .filters import FilterReport, PreprocessPlan, fill_forward, filter_table
from .transform import FittedTransform, apply_transform, fit_transform

__all__ = [
    "FilterReport",
    "PreprocessPlan",
    "fill_forward",
    "filter_table",
    "FittedTransform",
    "apply_transform",
    "fit_transform"
]
