"""Recursive feature elimination."""

from .elimination import RFE_CONFIG_ID, RfeResult, RfeTrace, rfe_select, run_rfe_cv, selection_frequency

__all__ = ["RFE_CONFIG_ID", "RfeResult", "RfeTrace", "rfe_select", "run_rfe_cv", "selection_frequency"]
