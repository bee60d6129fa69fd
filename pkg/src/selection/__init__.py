"""Patient selection by conventional criteria and by model predictions."""

from .conventional import ConventionalInputs, conventional_inputs, conventional_select, unevaluable
from .ml import ml_label_select, ml_prob_select, quotas
from .report import SelectionReport, selection_report

__all__ = [
    "ConventionalInputs",
    "conventional_inputs",
    "conventional_select",
    "unevaluable",
    "ml_label_select",
    "ml_prob_select",
    "quotas",
    "SelectionReport",
    "selection_report"
]
