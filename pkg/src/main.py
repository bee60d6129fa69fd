"""OAPT - knee osteoarthritis progression toolkit

Every stage reads one YAML run configuration and writes its artifacts to
the output directory.

Usage:
    python -m src.main <stage> [--config FILE] [--seed N] [--out DIR] [--workers N]

Example:
    python -m src.main synth --config config/desk.yaml
    python -m src.main evaluate --config config/desk.yaml
    python -m src.main select --config config/desk.yaml --mode ml-p --match-count

Exit codes: 0 ok, 1 stage failure, 2 configuration error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from .runner import STAGES, PipelineRunner
from .utils.artifacts import write_json
from .utils.config import SELECTION_MODES, config_hash, load_config, resolve_workers, validate_config
from .utils.errors import ConfigError
from .utils.logger import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_STAGE_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML run configuration")
    common.add_argument("--seed", type=int, default=None, help="master seed")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--workers", type=int, default=None, help="worker processes (-1 for all cores)")
    common.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--log-file", type=Path, default=None)

    parser = argparse.ArgumentParser(prog="oapt", description="Knee OA progression prediction pipeline")
    stages = parser.add_subparsers(dest="stage", required=True)
    for stage in STAGES:
        sub = stages.add_parser(stage, parents=[common])
        if stage == "select":
            sub.add_argument("--mode", choices=SELECTION_MODES, default=None)
            sub.add_argument(
                "--match-count",
                action="store_true",
                default=None,
                help="select as many instances by probability as the conventional criteria do"
            )
    return parser


def apply_overrides(config: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    if args.seed is not None:
        config["seed"] = args.seed
    if args.out is not None:
        config["data"]["output_dir"] = str(args.out)
    if getattr(args, "mode", None) is not None:
        config["selection"]["mode"] = args.mode
    if getattr(args, "match_count", None) is not None:
        config["selection"]["match_count"] = args.match_count
    return config


def write_error(out_dir: Path, stage: str, error: Exception, digest: Optional[str], seed: Optional[int]):
    try:
        write_json({
            "stage": stage,
            "error": type(error).__name__,
            "message": str(error),
            "config_hash": digest,
            "seed": seed
        }, Path(out_dir) / "error.json")
    except OSError as e:
        logger.error(f"Could not write error record: {e}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(level=getattr(logging, args.log_level), log_file=args.log_file, stage=args.stage)

    out_dir = args.out or Path("output")
    try:
        config = apply_overrides(load_config(args.config), args)
        out_dir = Path(config["data"]["output_dir"])
        validate_config(config)
        workers = resolve_workers(config, args.workers)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        write_error(out_dir, args.stage, e, None, args.seed)
        return EXIT_CONFIG_ERROR

    digest = config_hash(config)
    try:
        runner = PipelineRunner(config, out_dir, workers)
        runner.run(args.stage)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        write_error(out_dir, args.stage, e, digest, config["seed"])
        return EXIT_CONFIG_ERROR
    except Exception as e:
        logger.exception(f"Stage '{args.stage}' failed: {e}")
        write_error(out_dir, args.stage, e, digest, config["seed"])
        return EXIT_STAGE_FAILURE

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
