"""Utility modules."""

from .artifacts import read_header, read_json, read_table, run_header, write_json, write_table, write_yaml
from .config import config_hash, load_config, resolve_workers, save_config, validate_config
from .errors import (
    CohortLoadError,
    ConfigError,
    DegenerateLabelError,
    EmptyFeatureSpaceError,
    ModelFormatError,
    PipelineError
)
from .logger import setup_logging
from .performance import PerformanceMonitor
from .seeds import derive_rng, derive_seed

__all__ = [
    "run_header",
    "write_table",
    "read_table",
    "read_header",
    "write_yaml",
    "write_json",
    "read_json",
    "load_config",
    "save_config",
    "validate_config",
    "config_hash",
    "resolve_workers",
    "setup_logging",
    "PerformanceMonitor",
    "derive_seed",
    "derive_rng",
    "ConfigError",
    "PipelineError",
    "CohortLoadError",
    "EmptyFeatureSpaceError",
    "DegenerateLabelError",
    "ModelFormatError"
]
