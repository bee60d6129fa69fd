"""Configuration management."""

import copy
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)

WORKERS_ENV = "OAPT_WORKERS"

DEFAULT_CONFIG = {
    "data": {
        "cohort": "data/cohort.csv",
        "metadata": "data/metadata.yaml",
        "replacements": None,
        "output_dir": "output"
    },
    "cohort": {
        "exclude_replacement_visit": True,
        "pain_mode": "timepoint"
    },
    "preprocess": {
        "attr_missing_threshold": 0.5,
        "row_missing_threshold": 0.4,
        "scaling": False
    },
    "forest": {
        "n_trees": 100,
        "max_depth": None,
        "criterion": "gini",
        "min_samples_split": 2,
        "features_per_split": "sqrt",
        "bootstrap": True
    },
    "strategy": "duo",
    "cv": {
        "repeats": 10,
        "folds": 10,
        "seeds": 25
    },
    "curve": {
        "fractions": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
        "mode": "full_imbalanced",
        "n_samples": 11,
        "class_size": None,
        "algorithm": "forest"
    },
    "tuning": {
        "n_trees": [100, 200, 400, 600, 800, 1000],
        "max_depth": [4, 5, 6, 7, 8, 9, 10],
        "criterion": ["gini", "entropy"]
    },
    "bbc": {
        "n_boot": 1000
    },
    "rfe": {
        "inner_folds": 3
    },
    "explain": {
        "max_instances": None
    },
    "selection": {
        "mode": "ml-p",
        "match_count": True,
        "columns": {
            "age": "age",
            "morning_stiffness_minutes": "stiffness_minutes",
            "knee_pain": ["knee_pain_l", "knee_pain_r"],
            "crepitus": ["crepitus_l", "crepitus_r"],
            "osteophytes": ["osteophytes_l", "osteophytes_r"],
            "kl_grade": ["kl_l", "kl_r"],
            "womac_pain": ["womac_pain_l", "womac_pain_r"]
        }
    },
    "synth": {
        "n_patients": 1000,
        "timepoints": [0, 2, 5, 8],
        "n_informative_features": 30,
        "n_noise_features": 70,
        "class_fractions": [0.63, 0.12, 0.20, 0.05],
        "missingness": 0.1,
        "signal_strength": [1.0, 1.0],
        "replacement_rate": 0.0,
        "improver_fraction": 0.35,
        "outcomes_as_features": False
    },
    "seed": 0,
    "workers": 1
}

STRATEGIES = ("single", "one_vs_rest", "multilabel", "duo")
CRITERIA = ("gini", "entropy")
CURVE_MODES = ("full_imbalanced", "balanced_downsample")
SELECTION_MODES = ("conventional", "ml-l", "ml-p")


def load_config(config_path: Optional[Path]) -> Dict[str, Any]:
    """Load configuration from a YAML file merged over the defaults."""

    config = copy.deepcopy(DEFAULT_CONFIG)

    if config_path is None:
        logger.info("No configuration file given, using defaults")
        return config

    config_path = Path(config_path)
    if not config_path.exists():
        raise ConfigError(f"Config file not found: {config_path}")

    try:
        with open(config_path) as f:
            user_config = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML in {config_path}: {e}") from e

    if not isinstance(user_config, dict):
        raise ConfigError(f"Config root must be a mapping: {config_path}")

    config = _deep_merge(config, user_config)
    logger.info(f"Loaded configuration from {config_path}")

    return config


def save_config(config: Dict[str, Any], config_path: Path):
    """Save configuration to YAML file."""

    config_path = Path(config_path)
    config_path.parent.mkdir(parents=True, exist_ok=True)
    with open(config_path, "w") as f:
        yaml.safe_dump(config, f, default_flow_style=False, sort_keys=False)
    logger.info(f"Saved configuration to {config_path}")


def config_hash(config: Dict[str, Any]) -> str:
    """Stable hash of a configuration."""

    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def resolve_workers(config: Dict[str, Any], override: Optional[int] = None) -> int:
    """Worker count: explicit flag, then environment, then config."""

    if override is not None:
        return override

    env_value = os.environ.get(WORKERS_ENV)
    if env_value:
        try:
            return int(env_value)
        except ValueError as e:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env_value!r}") from e

    return int(config.get("workers", 1))


def validate_config(config: Dict[str, Any]):
    """Raise ConfigError for values outside their documented ranges."""

    plan = config["preprocess"]
    for key in ("attr_missing_threshold", "row_missing_threshold"):
        if not 0.0 <= float(plan[key]) <= 1.0:
            raise ConfigError(f"preprocess.{key} must be in [0, 1], got {plan[key]}")

    forest = config["forest"]
    if int(forest["n_trees"]) < 1:
        raise ConfigError("forest.n_trees must be positive")
    if forest["max_depth"] is not None and int(forest["max_depth"]) < 1:
        raise ConfigError("forest.max_depth must be positive or null")
    if forest["criterion"] not in CRITERIA:
        raise ConfigError(f"forest.criterion must be one of {CRITERIA}")
    if int(forest["min_samples_split"]) < 2:
        raise ConfigError("forest.min_samples_split must be at least 2")

    if config["strategy"] not in STRATEGIES:
        raise ConfigError(f"strategy must be one of {STRATEGIES}, got {config['strategy']!r}")

    cv = config["cv"]
    if int(cv["folds"]) < 2:
        raise ConfigError("cv.folds must be at least 2")
    for key in ("repeats", "seeds"):
        if int(cv[key]) < 1:
            raise ConfigError(f"cv.{key} must be positive")

    curve = config["curve"]
    if curve["mode"] not in CURVE_MODES:
        raise ConfigError(f"curve.mode must be one of {CURVE_MODES}")
    if curve["algorithm"] not in ("forest", "knn"):
        raise ConfigError("curve.algorithm must be 'forest' or 'knn'")
    if any(not 0.0 < float(f) <= 1.0 for f in curve["fractions"]):
        raise ConfigError("curve.fractions must lie in (0, 1]")

    tuning = config["tuning"]
    if any(c not in CRITERIA for c in tuning["criterion"]):
        raise ConfigError(f"tuning.criterion entries must be in {CRITERIA}")

    if int(config["bbc"]["n_boot"]) < 1:
        raise ConfigError("bbc.n_boot must be positive")
    if int(config["rfe"]["inner_folds"]) < 2:
        raise ConfigError("rfe.inner_folds must be at least 2")

    if config["selection"]["mode"] not in SELECTION_MODES:
        raise ConfigError(f"selection.mode must be one of {SELECTION_MODES}")

    if config["cohort"]["pain_mode"] not in ("timepoint", "knee"):
        raise ConfigError("cohort.pain_mode must be 'timepoint' or 'knee'")

    if int(config.get("workers", 1)) == 0:
        raise ConfigError("workers must be non-zero")


def _deep_merge(base: dict, override: dict) -> dict:
    """Deep merge two dictionaries."""

    result = base.copy()

    for key, value in override.items():
        if key in result and isinstance(result[key], dict) and isinstance(value, dict):
            result[key] = _deep_merge(result[key], value)
        else:
            result[key] = value

    return result
