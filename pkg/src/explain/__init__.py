"""Tree-exact Shapley attributions and impact summaries."""

from .summary import ImpactSummary, summarize_impact
from .treeshap import (
    MAX_BRUTE_FORCE_FEATURES,
    ShapAttribution,
    brute_force_shapley,
    conditional_expectation,
    expected_value,
    explain_duo,
    explain_strategy,
    explained_outputs,
    forest_shap,
    local_accuracy_error,
    node_values,
    tree_shap
)

__all__ = [
    "MAX_BRUTE_FORCE_FEATURES",
    "ImpactSummary",
    "ShapAttribution",
    "brute_force_shapley",
    "conditional_expectation",
    "expected_value",
    "explain_duo",
    "explain_strategy",
    "explained_outputs",
    "forest_shap",
    "local_accuracy_error",
    "node_values",
    "summarize_impact",
    "tree_shap"
]
