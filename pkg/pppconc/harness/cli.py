"""Command-line entry point: ``pppconc <subcommand> --config path.json``."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from pppconc.harness.config import Experiment, ExperimentConfig
from pppconc.harness.experiments import run
from shared.config import get_settings
from shared.errors import ExitCode, exit_code_for
from shared.logging_config import setup_logging

logger = logging.getLogger("pppconc.cli")


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(
        prog=settings.tool_name,
        description="Poisson point process simulation, concentration checks and "
        "adaptive intensity estimation experiments.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {settings.tool_version}"
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="subcommand")
    for experiment in Experiment:
        cmd = sub.add_parser(experiment.value, help=f"run the {experiment.value} experiment")
        cmd.add_argument("--config", type=Path, default=None, help="JSON experiment document")
        cmd.add_argument("--seed", type=int, default=None, help="64-bit root seed")
        cmd.add_argument("--threads", type=int, default=None, help="worker threads")
        cmd.add_argument("--out", type=Path, default=None, help="output directory")
        cmd.add_argument(
            "--log-level",
            choices=["DEBUG", "INFO", "WARNING", "ERROR"],
            default=None,
        )
    return parser


def overrides_from(args: argparse.Namespace) -> dict[str, Any]:
    """CLI flags as config overrides; unset flags stay None and are ignored."""
    return {
        "experiment": args.experiment,
        "seed": args.seed,
        "threads": args.threads,
        "out_dir": args.out,
        "log_level": args.log_level,
    }


def main(argv: Sequence[str] | None = None) -> int:
    """Parse flags, load the config and run the experiment; returns the exit status."""
    args = build_parser().parse_args(argv)
    setup_logging(level=args.log_level or get_settings().log_level)

    try:
        config = ExperimentConfig.load(args.config, overrides_from(args))
    except (ValidationError, ValueError, OSError) as e:
        logger.error(f"Could not load configuration: {str(e)}", exc_info=True)
        return int(exit_code_for(e))

    if args.log_level is None and config.log_level != get_settings().log_level:
        setup_logging(level=config.log_level)

    status = run(config)
    if status is not ExitCode.OK:
        logger.error(f"{config.experiment.value} exited with status {int(status)}")
    return int(status)


if __name__ == "__main__":
    sys.exit(main())
