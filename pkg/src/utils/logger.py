"""Logging configuration."""

import logging
import sys
from pathlib import Path
from typing import Optional

DEFAULT_FORMAT = "%(asctime)s | %(levelname)-8s | %(stage)s | %(name)s | %(message)s"


class StageFilter(logging.Filter):
    """Stamps every record with the pipeline stage being run."""

    def __init__(self, stage: str = "-"):
        super().__init__()
        self.stage = stage

    def filter(self, record: logging.LogRecord) -> bool:
        record.stage = self.stage
        return True


def setup_logging(
    level: int = logging.INFO,
    log_file: Optional[Path] = None,
    format_string: Optional[str] = None,
    stage: str = "-"
):
    """Configure the root logger for one CLI invocation.

    Records carry the stage name, so a log file appended to by several
    stages stays readable. Library warnings are routed through logging.
    """

    formatter = logging.Formatter(format_string or DEFAULT_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")
    stage_filter = StageFilter(stage)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    # Reports go to stdout, so logs stay on stderr
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        log_file = Path(log_file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(log_file, mode="a", encoding="utf-8"))

    for handler in handlers:
        handler.setLevel(level)
        handler.setFormatter(formatter)
        handler.addFilter(stage_filter)
        root_logger.addHandler(handler)

    logging.captureWarnings(True)

    # Worker pools log every batch at INFO
    logging.getLogger("joblib").setLevel(logging.WARNING)
