"""Reading and writing run artifacts."""

import json
import logging
from pathlib import Path
from typing import Any, Dict

import pandas as pd
import yaml

logger = logging.getLogger(__name__)

HEADER_PREFIX = "# run: "


def run_header(config_hash: str, seed: int, version: str) -> str:
    return f"{HEADER_PREFIX}config_hash={config_hash} seed={seed} version={version}"


def write_table(frame: pd.DataFrame, path: Path, header: str = "") -> Path:
    """Write a CSV preceded by a run-header comment line."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        if header:
            f.write(header + "\n")
        frame.to_csv(f, index=False, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def read_table(path: Path, **kwargs) -> pd.DataFrame:
    """Read a CSV written by `write_table`."""

    return pd.read_csv(path, comment="#", **kwargs)


def read_header(path: Path) -> Dict[str, str]:
    """Key/value pairs of the run-header line, empty if there is none."""

    with open(path, encoding="utf-8") as f:
        first = f.readline().strip()
    if not first.startswith(HEADER_PREFIX):
        return {}
    pairs = first[len(HEADER_PREFIX):].split()
    return dict(pair.split("=", 1) for pair in pairs if "=" in pair)


def write_yaml(document: Any, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(document, f, default_flow_style=False, sort_keys=False)
    logger.info(f"Wrote {path}")
    return path


def write_json(document: Any, path: Path) -> Path:
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")
    logger.info(f"Wrote {path}")
    return path


def read_json(path: Path) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
